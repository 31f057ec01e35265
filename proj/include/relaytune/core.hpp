#pragma once

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaytune {

/// Thrown when an operation rejects its inputs. The message carries the diagnostic.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw Error(message);
}

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniformly sampled signal starting at `start` with spacing `dt`.
struct TimeSeries {
    double start = 0.0;
    double dt = 1e-3;
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(double start_s, double dt_s, std::vector<double> v)
        : start(start_s), dt(dt_s), values(std::move(v))
    {
    }

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool empty() const { return values.empty(); }
    [[nodiscard]] double time(std::size_t i) const { return start + dt * static_cast<double>(i); }
    [[nodiscard]] double duration() const { return dt * static_cast<double>(values.size()); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    /// Linear interpolation; clamps outside the sampled range.
    [[nodiscard]] double at_time(double t) const
    {
        if (values.empty())
            return 0.0;
        const double x = (t - start) / dt;
        if (x <= 0.0)
            return values.front();
        const auto last = static_cast<double>(values.size() - 1);
        if (x >= last)
            return values.back();
        const auto i = static_cast<std::size_t>(x);
        const double f = x - static_cast<double>(i);
        return (1.0 - f) * values[i] + f * values[i + 1];
    }

    void validate(const std::string& what = "time series") const
    {
        require(dt > 0.0 && std::isfinite(dt), what + ": dt must be positive");
        for (std::size_t i = 0; i < values.size(); ++i)
            require(std::isfinite(values[i]),
                    what + ": non-finite sample at index " + std::to_string(i));
    }
};

inline TimeSeries constant_series(double value, double duration, double dt)
{
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));
    return {0.0, dt, std::vector<double>(n, value)};
}

inline double mean(std::span<const double> v)
{
    if (v.empty())
        return 0.0;
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

/// Percentile with linear interpolation between order statistics, p in [0, 100].
inline double percentile(std::vector<double> v, double p)
{
    require(!v.empty(), "percentile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return (1.0 - f) * v[lo] + f * v[hi];
}

inline double wrap_angle(double a)
{
    while (a > kPi)
        a -= 2.0 * kPi;
    while (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

} // namespace relaytune
