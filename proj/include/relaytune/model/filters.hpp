#pragma once

#include <complex>

#include "relaytune/core.hpp"

namespace relaytune {

/// Second-order Butterworth section discretized with the prewarped bilinear transform.
class Biquad {
public:
    enum class Kind { LowPass, HighPass };

    Biquad() = default;
    Biquad(Kind kind, double cutoff_hz, double dt) : kind_(kind), cutoff_hz_(cutoff_hz), dt_(dt)
    {
        require(cutoff_hz > 0.0 && dt > 0.0, "filter cutoff and step must be positive");
        require(cutoff_hz < 0.5 / dt, "filter cutoff must lie below the Nyquist frequency");
        const double k = std::tan(kPi * cutoff_hz * dt);
        const double q = std::sqrt(2.0);
        const double norm = 1.0 / (1.0 + q * k + k * k);
        if (kind == Kind::LowPass) {
            b0_ = k * k * norm;
            b1_ = 2.0 * b0_;
            b2_ = b0_;
        } else {
            b0_ = norm;
            b1_ = -2.0 * norm;
            b2_ = norm;
        }
        a1_ = 2.0 * (k * k - 1.0) * norm;
        a2_ = (1.0 - q * k + k * k) * norm;
        enabled_ = true;
    }

    static Biquad low_pass(double cutoff_hz, double dt) { return {Kind::LowPass, cutoff_hz, dt}; }
    static Biquad high_pass(double cutoff_hz, double dt) { return {Kind::HighPass, cutoff_hz, dt}; }

    double operator()(double x)
    {
        if (!enabled_)
            return x;
        const double y = b0_ * x + z1_;
        z1_ = b1_ * x - a1_ * y + z2_;
        z2_ = b2_ * x - a2_ * y;
        return y;
    }

    void reset() { z1_ = z2_ = 0.0; }

    /// Primes the state so a constant input `x` passes without transient.
    void settle(double x)
    {
        if (!enabled_)
            return;
        const double y = x * (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_);
        z2_ = b2_ * x - a2_ * y;
        z1_ = b1_ * x - a1_ * y + z2_;
    }

    /// Discrete response H(e^{j omega dt}).
    [[nodiscard]] std::complex<double> response(double omega) const
    {
        if (!enabled_)
            return {1.0, 0.0};
        const std::complex<double> z1 = std::exp(std::complex<double>(0.0, -omega * dt_));
        const auto z2 = z1 * z1;
        return (b0_ + b1_ * z1 + b2_ * z2) / (1.0 + a1_ * z1 + a2_ * z2);
    }

    [[nodiscard]] bool enabled() const { return enabled_; }
    [[nodiscard]] double cutoff_hz() const { return cutoff_hz_; }

private:
    Kind kind_ = Kind::LowPass;
    double cutoff_hz_ = 0.0;
    double dt_ = 1.0;
    double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
    double z1_ = 0.0, z2_ = 0.0;
    bool enabled_ = false;
};

} // namespace relaytune
