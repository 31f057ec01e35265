#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <vector>

#include "relaytune/model/transfer_function.hpp"

namespace relaytune {

/// Input history with fractional read-out, used to realize e^{-tau s}.
class DelayLine {
public:
    DelayLine() = default;
    DelayLine(double delay, double dt)
    {
        require(dt > 0.0, "delay line dt must be positive");
        const double d = delay / dt;
        whole_ = static_cast<std::size_t>(std::floor(d + 1e-9));
        frac_ = std::max(0.0, d - static_cast<double>(whole_));
        if (frac_ < 1e-9)
            frac_ = 0.0;
        buffer_.assign(whole_ + 2, 0.0);
    }

    /// Pushes the current input and returns the input delayed by `delay`.
    double push(double u)
    {
        head_ = (head_ + 1) % buffer_.size();
        buffer_[head_] = u;
        const double a = sample(whole_);
        if (frac_ == 0.0)
            return a;
        return (1.0 - frac_) * a + frac_ * sample(whole_ + 1);
    }

    void reset() { std::fill(buffer_.begin(), buffer_.end(), 0.0); }

private:
    [[nodiscard]] double sample(std::size_t lag) const
    {
        const std::size_t n = buffer_.size();
        return buffer_[(head_ + n - (lag % n)) % n];
    }

    std::vector<double> buffer_ = {0.0, 0.0};
    std::size_t head_ = 0;
    std::size_t whole_ = 0;
    double frac_ = 0.0;
};

/// Exact zero-order-hold discretization of a TransferFunctionModel at a fixed step.
///
/// The rational part is realized as a chain of lags followed by the integrators and
/// discretized through the augmented matrix exponential, so lags and integrators are
/// both exact for inputs held constant over a step. The delay is applied to the
/// input with linear interpolation for the fractional part.
class LtiStepper {
public:
    using Matrix = Eigen::MatrixXd;
    using Vector = Eigen::VectorXd;

    LtiStepper() = default;
    LtiStepper(const TransferFunctionModel& model, double dt) : dt_(dt), delay_(model.delay, dt)
    {
        model.validate();
        require(dt > 0.0, "integration step must be positive");
        const auto n = static_cast<Eigen::Index>(model.state_dimension());
        if (n == 0) {
            feedthrough_ = model.gain;
            return;
        }
        Matrix a = Matrix::Zero(n, n);
        Vector b = Vector::Zero(n);
        Eigen::Index i = 0;
        for (double t : model.time_constants) {
            a(i, i) = -1.0 / t;
            if (i == 0)
                b(0) = model.gain / t;
            else
                a(i, i - 1) = 1.0 / t;
            ++i;
        }
        for (int k = 0; k < model.integrator_order; ++k) {
            if (i == 0)
                b(0) = model.gain;
            else
                a(i, i - 1) = 1.0;
            ++i;
        }
        Matrix aug = Matrix::Zero(n + 1, n + 1);
        aug.topLeftCorner(n, n) = a * dt;
        aug.topRightCorner(n, 1) = b * dt;
        const Matrix e = aug.exp();
        phi_ = e.topLeftCorner(n, n);
        gamma_ = e.topRightCorner(n, 1);
        x_ = Vector::Zero(n);
    }

    /// Output at the current instant from the state alone (no feed-through term).
    [[nodiscard]] double output() const { return x_.size() ? x_(x_.size() - 1) : held_ * feedthrough_; }

    /// Applies `u` over the next step. Returns the output at the start of the step,
    /// including feed-through for models without dynamic states.
    double advance(double u)
    {
        const double ud = delay_.push(u);
        if (x_.size() == 0) {
            held_ = ud;
            return feedthrough_ * ud;
        }
        const double y = x_(x_.size() - 1);
        x_ = phi_ * x_ + gamma_ * ud;
        return y;
    }

    /// Adds a disturbance to the state driving the last stage.
    void inject(double value)
    {
        if (x_.size())
            x_(x_.size() - 1) += value;
    }

    [[nodiscard]] const Vector& state() const { return x_; }
    [[nodiscard]] double dt() const { return dt_; }

private:
    double dt_ = 1e-3;
    DelayLine delay_;
    Matrix phi_;
    Vector gamma_;
    Vector x_;
    double feedthrough_ = 0.0;
    double held_ = 0.0;
};

/// Open-loop response of `model` to `input`, zero initial conditions.
inline TimeSeries simulate_lti(const TransferFunctionModel& model, const TimeSeries& input)
{
    input.validate("simulate_lti input");
    require(!input.empty(), "simulate_lti: empty input");
    require(input.duration() > model.delay,
            "simulate_lti: horizon " + std::to_string(input.duration()) + " s is shorter than the delay " +
                std::to_string(model.delay) + " s");
    LtiStepper plant(model, input.dt);
    TimeSeries out(input.start, input.dt, std::vector<double>(input.size()));
    for (std::size_t k = 0; k < input.size(); ++k)
        out[k] = plant.advance(input[k]);
    return out;
}

} // namespace relaytune
