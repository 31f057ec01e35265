#pragma once

#include <deque>
#include <optional>
#include <random>

#include "relaytune/core.hpp"

namespace relaytune {

enum class SensorKind { Normal, Event, Thermal, Imu };

inline std::string to_string(SensorKind k)
{
    switch (k) {
    case SensorKind::Normal:
        return "normal";
    case SensorKind::Event:
        return "event";
    case SensorKind::Thermal:
        return "thermal";
    case SensorKind::Imu:
        return "imu";
    }
    return "?";
}

inline SensorKind sensor_kind_from_string(const std::string& s)
{
    if (s == "normal")
        return SensorKind::Normal;
    if (s == "event")
        return SensorKind::Event;
    if (s == "thermal")
        return SensorKind::Thermal;
    if (s == "imu")
        return SensorKind::Imu;
    throw Error("unknown sensor kind '" + s + "' (expected normal, event, thermal or imu)");
}

/// Rate, latency and noise of one sensor. Noise units follow the measured quantity
/// (m for cameras, m/s^2 for the accelerometer).
struct SensorProfile {
    SensorKind kind = SensorKind::Normal;
    double rate = 60.0;
    double latency = 0.03;
    double sigma = 0.005;
    double a_n = 0.0;
    double omega_n = 0.0;
    double psi_n = 0.0;
    /// Position resolution of one pixel at the working depth; 0 disables quantization.
    double quantization = 0.001;
    /// Constant offset (accelerometer bias).
    double bias = 0.0;

    // Latencies and noise levels are placeholders, only the rates are measured values.
    static SensorProfile normal() { return {}; }
    static SensorProfile event()
    {
        SensorProfile p;
        p.kind = SensorKind::Event;
        p.rate = 100.0;
        p.latency = 0.01;
        p.sigma = 0.008;
        p.quantization = 0.003;
        return p;
    }
    static SensorProfile thermal()
    {
        SensorProfile p;
        p.kind = SensorKind::Thermal;
        p.rate = 9.0;
        p.latency = 0.1;
        p.sigma = 0.02;
        p.quantization = 0.01;
        return p;
    }
    static SensorProfile imu()
    {
        SensorProfile p;
        p.kind = SensorKind::Imu;
        p.rate = 200.0;
        p.latency = 0.0;
        p.sigma = 0.02;
        p.quantization = 0.0;
        return p;
    }
    static SensorProfile for_kind(SensorKind k)
    {
        switch (k) {
        case SensorKind::Event:
            return event();
        case SensorKind::Thermal:
            return thermal();
        case SensorKind::Imu:
            return imu();
        default:
            return normal();
        }
    }

    void validate() const
    {
        require(std::isfinite(rate) && rate > 0.0, "sensor profile: rate must be positive");
        require(std::isfinite(latency) && latency >= 0.0, "sensor profile: latency must be non-negative");
        require(sigma >= 0.0 && a_n >= 0.0 && quantization >= 0.0, "sensor profile: noise terms must be non-negative");
        require(a_n == 0.0 || omega_n > 0.0, "sensor profile: sinusoidal noise needs a positive frequency");
        require(std::isfinite(bias), "sensor profile: bias must be finite");
    }

    /// The same sensor without any corruption (rate and latency kept).
    [[nodiscard]] SensorProfile clean() const
    {
        SensorProfile p = *this;
        p.sigma = p.a_n = p.quantization = p.bias = 0.0;
        return p;
    }
};

struct Measurement {
    double t = 0.0;
    double value = 0.0;
};

/// Recent truth samples at the simulation step, read back with interpolation.
class TruthHistory {
public:
    explicit TruthHistory(double span = 1.0) : span_(span) {}

    void push(double t, double v)
    {
        samples_.push_back({t, v});
        while (samples_.size() > 2 && samples_.front().t < t - span_)
            samples_.pop_front();
    }

    /// Adds `d` to every recorded value.
    void shift(double d)
    {
        for (auto& m : samples_)
            m.value += d;
    }

    /// Clamps to the oldest sample before the recorded window.
    [[nodiscard]] double at(double t) const
    {
        require(!samples_.empty(), "truth history is empty");
        if (t <= samples_.front().t)
            return samples_.front().value;
        if (t >= samples_.back().t)
            return samples_.back().value;
        auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                                   [](const Measurement& m, double x) { return m.t < x; });
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double f = (t - a.t) / (b.t - a.t);
        return (1.0 - f) * a.value + f * b.value;
    }

private:
    double span_;
    std::deque<Measurement> samples_;
};

/// Frame clock and corruption of one sensor. Frame k is taken at k / rate and reports
/// the truth `latency` earlier plus Gaussian and sinusoidal noise, rounded to the
/// quantization step.
class SensorChannel {
public:
    SensorChannel() = default;
    SensorChannel(const SensorProfile& p, std::uint64_t seed) : p_(p), rng_(seed) { p.validate(); }

    [[nodiscard]] double next_frame_time() const { return static_cast<double>(frame_) / p_.rate; }

    /// Emits the frame due at or before `now`, if any.
    std::optional<Measurement> poll(double now, const TruthHistory& truth)
    {
        const auto tf = due(now);
        if (!tf)
            return std::nullopt;
        return Measurement{*tf, corrupt(*tf, truth.at(*tf - p_.latency))};
    }

    /// Time of the frame due at or before `now`, consuming it.
    std::optional<double> due(double now)
    {
        const double tf = next_frame_time();
        if (tf > now + 1e-12)
            return std::nullopt;
        ++frame_;
        return tf;
    }

    [[nodiscard]] double corrupt(double t, double v)
    {
        v += p_.bias;
        if (p_.sigma > 0.0)
            v += std::normal_distribution<double>(0.0, p_.sigma)(rng_);
        if (p_.a_n > 0.0)
            v += p_.a_n * std::sin(p_.omega_n * t + p_.psi_n);
        if (p_.quantization > 0.0)
            v = p_.quantization * std::round(v / p_.quantization);
        return v;
    }

    [[nodiscard]] const SensorProfile& profile() const { return p_; }

private:
    SensorProfile p_;
    std::mt19937_64 rng_;
    long frame_ = 0;
};

/// Measurement stream the sensor produces over the span of `truth`.
inline std::vector<Measurement> emulate_sensor(const TimeSeries& truth, const SensorProfile& profile, std::uint64_t seed)
{
    profile.validate();
    truth.validate("emulate_sensor truth");
    std::vector<Measurement> out;
    if (truth.empty())
        return out;
    SensorChannel ch(profile, seed);
    const double t_end = truth.time(truth.size() - 1);
    while (const auto tf = ch.due(t_end))
        out.push_back({*tf, ch.corrupt(*tf, truth.at_time(*tf - profile.latency))});
    return out;
}

/// Sample-and-hold read-out of a measurement stream at time t (first sample before the stream).
inline double held_value(const std::vector<Measurement>& m, double t)
{
    require(!m.empty(), "held_value: empty measurement stream");
    auto it = std::upper_bound(m.begin(), m.end(), t, [](double x, const Measurement& s) { return x < s.t; });
    if (it == m.begin())
        return m.front().value;
    return (it - 1)->value;
}

} // namespace relaytune
