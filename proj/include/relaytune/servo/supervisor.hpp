#pragma once

#include <optional>

#include "relaytune/core.hpp"

namespace relaytune {

/// Schedule 1 closes the loop on the IMU/camera filter estimate, Schedule 2 on the raw
/// camera measurement with gains tuned for it.
enum class Schedule { WithKf = 1, CameraOnly = 2 };

struct SupervisorConfig {
    /// Innovation threshold in innovation standard deviations (about sigma_c at steady state).
    double threshold_sigmas = 5.0;
    int consecutive = 3;
    /// Return to Schedule 1 once |e| stays under `settle_band` for `settle_time`.
    double settle_band = 0.03;
    double settle_time = 1.0;
    /// Fixed schedule (identification runs); the supervisor then never switches.
    std::optional<Schedule> pinned;

    void validate() const
    {
        require(threshold_sigmas > 0.0, "supervisor: threshold must be positive");
        require(consecutive >= 1, "supervisor: need at least one update over threshold");
        require(settle_band > 0.0 && settle_time >= 0.0, "supervisor: settle band and time must be positive");
    }
};

/// Switches to Schedule 2 when `consecutive` camera innovations in a row exceed the
/// threshold, and back once the servo error has settled.
class ScheduleSupervisor {
public:
    explicit ScheduleSupervisor(SupervisorConfig cfg = {}) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        if (cfg_.pinned)
            current_ = *cfg_.pinned;
    }

    /// Feeds one filter innovation. Returns true when this update triggered the switch.
    bool on_innovation(double innovation, double innovation_variance)
    {
        if (cfg_.pinned || current_ == Schedule::CameraOnly)
            return false;
        const double thr = cfg_.threshold_sigmas * std::sqrt(std::max(innovation_variance, 0.0));
        over_ = std::abs(innovation) > thr ? over_ + 1 : 0;
        if (over_ < cfg_.consecutive)
            return false;
        current_ = Schedule::CameraOnly;
        over_ = 0;
        settled_since_.reset();
        return true;
    }

    /// Feeds the servo error at time t. Returns true when this sample switched back to Schedule 1.
    bool on_error(double t, double error)
    {
        if (cfg_.pinned || current_ == Schedule::WithKf)
            return false;
        if (std::abs(error) >= cfg_.settle_band) {
            settled_since_.reset();
            return false;
        }
        if (!settled_since_)
            settled_since_ = t;
        if (t - *settled_since_ < cfg_.settle_time)
            return false;
        current_ = Schedule::WithKf;
        settled_since_.reset();
        return true;
    }

    [[nodiscard]] Schedule current() const { return current_; }

private:
    SupervisorConfig cfg_;
    Schedule current_ = Schedule::WithKf;
    int over_ = 0;
    std::optional<double> settled_since_;
};

} // namespace relaytune
