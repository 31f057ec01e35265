#pragma once

#include <complex>
#include <string>
#include <vector>

#include "relaytune/core.hpp"

namespace relaytune {

/// Lumped delayed-LTI process
///
///            K e^{-tau s}
///   G(s) = ---------------------------
///           s^n  prod_i (T_i s + 1)
///
/// n = 0 with one lag is the propulsion model, n = 1 with (T_prop, T_1) the
/// attitude/altitude model, n = 2 with (T_prop, T_1, T_2) the lateral model.
struct TransferFunctionModel {
    double gain = 1.0;
    std::vector<double> time_constants;
    double delay = 0.0;
    int integrator_order = 0;

    void validate() const
    {
        require(std::isfinite(gain) && gain > 0.0, "model gain must be positive and finite");
        require(std::isfinite(delay) && delay >= 0.0, "model delay must be non-negative");
        require(integrator_order >= 0 && integrator_order <= 2, "integrator order must be 0, 1 or 2");
        for (double t : time_constants)
            require(std::isfinite(t) && t > 0.0, "time constants must be positive");
    }

    [[nodiscard]] std::size_t state_dimension() const
    {
        return time_constants.size() + static_cast<std::size_t>(integrator_order);
    }

    [[nodiscard]] TransferFunctionModel with_gain(double k) const
    {
        auto m = *this;
        m.gain = k;
        return m;
    }

    /// Stretches every time parameter by `alpha` (tau, T_i -> alpha tau, alpha T_i).
    [[nodiscard]] TransferFunctionModel time_scaled(double alpha) const
    {
        auto m = *this;
        for (auto& t : m.time_constants)
            t *= alpha;
        m.delay *= alpha;
        return m;
    }

    static TransferFunctionModel propulsion(double k, double t_prop, double tau)
    {
        return {k, {t_prop}, tau, 0};
    }
    static TransferFunctionModel inner(double k, double t_prop, double t1, double tau)
    {
        return {k, {t_prop, t1}, tau, 1};
    }
    static TransferFunctionModel lateral(double k, double t_prop, double t1, double t2, double tau)
    {
        return {k, {t_prop, t1, t2}, tau, 2};
    }

    [[nodiscard]] std::string describe() const
    {
        std::string s = "K=" + std::to_string(gain) + " n=" + std::to_string(integrator_order) + " T={";
        for (std::size_t i = 0; i < time_constants.size(); ++i)
            s += (i ? "," : "") + std::to_string(time_constants[i]);
        return s + "} tau=" + std::to_string(delay);
    }
};

/// G(j omega), including the delay phase.
inline std::complex<double> frequency_response(const TransferFunctionModel& model, double omega)
{
    require(std::isfinite(omega) && omega >= 0.0, "frequency must be non-negative");
    require(omega > 0.0 || model.integrator_order == 0, "omega = 0 with an integrator (pole at origin)");
    using C = std::complex<double>;
    const C s(0.0, omega);
    C den(1.0, 0.0);
    for (int i = 0; i < model.integrator_order; ++i)
        den *= s;
    for (double t : model.time_constants)
        den *= (t * s + 1.0);
    return model.gain * std::exp(-s * model.delay) / den;
}

/// Unwrapped phase of G(j omega) in radians, computed term by term.
inline double unwrapped_phase(const TransferFunctionModel& model, double omega)
{
    double ph = -omega * model.delay - model.integrator_order * kPi / 2.0;
    for (double t : model.time_constants)
        ph -= std::atan(omega * t);
    return ph;
}

} // namespace relaytune
