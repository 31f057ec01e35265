#pragma once

#include <Eigen/Dense>

#include "relaytune/core.hpp"

namespace relaytune {

/// One decoupled axis filter: x = [p, v, a_b] with a_b the accelerometer bias.
///
/// sigma_p is the accelerometer noise (m/s^2) entering through B; sigma_bias is the bias
/// random walk (m/s^2 per sqrt s); sigma_c the camera position noise (m).
struct KfState {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
    double sigma_p = 0.05;
    double sigma_bias = 1e-3;
    double sigma_c = 0.005;
    double dt = 0.005;

    void validate() const
    {
        require(x.allFinite() && p.allFinite(), "kalman filter: non-finite state");
        require(dt > 0.0 && std::isfinite(dt), "kalman filter: step must be positive");
        require(sigma_p >= 0.0 && sigma_bias >= 0.0, "kalman filter: process noise must be non-negative");
        require(sigma_c > 0.0, "kalman filter: camera noise must be positive");
    }

    [[nodiscard]] double position_sigma() const { return std::sqrt(std::max(0.0, p(0, 0))); }
};

inline Eigen::Matrix3d kf_transition(double dt)
{
    Eigen::Matrix3d f;
    f << 1.0, dt, -dt * dt, 0.0, 1.0, -dt, 0.0, 0.0, 1.0;
    return f;
}

inline Eigen::Vector3d kf_input(double dt) { return {dt * dt, dt, 0.0}; }

inline KfState kf_predict(KfState s, double u)
{
    require(std::isfinite(u), "kf_predict: non-finite accelerometer input");
    s.validate();
    const Eigen::Matrix3d f = kf_transition(s.dt);
    const Eigen::Vector3d b = kf_input(s.dt);
    s.x = f * s.x + b * u;
    Eigen::Matrix3d q = s.sigma_p * s.sigma_p * b * b.transpose();
    q(2, 2) += s.sigma_bias * s.sigma_bias * s.dt;
    s.p = f * s.p * f.transpose() + q;
    s.p = 0.5 * (s.p + s.p.transpose());
    return s;
}

struct KfUpdate {
    KfState state;
    double innovation = 0.0;
    /// Innovation variance H P H^T + sigma_c^2 before the update.
    double innovation_variance = 0.0;
};

/// Position correction with measurement noise sigma_c (m); Joseph form keeps P symmetric PSD.
inline KfUpdate kf_update(KfState s, double z, double sigma_c)
{
    require(std::isfinite(z), "kf_update: non-finite measurement");
    require(sigma_c > 0.0, "kf_update: sigma_c must be positive");
    s.validate();
    KfUpdate out;
    out.innovation = z - s.x(0);
    const double r = sigma_c * sigma_c;
    out.innovation_variance = s.p(0, 0) + r;
    if (!std::isfinite(r)) {
        out.state = s;
        return out;
    }
    const Eigen::Vector3d k = s.p.col(0) / out.innovation_variance;
    s.x += k * out.innovation;
    Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity();
    ikh.col(0) -= k;
    s.p = ikh * s.p * ikh.transpose() + r * k * k.transpose();
    s.p = 0.5 * (s.p + s.p.transpose());
    out.state = s;
    return out;
}

inline KfUpdate kf_update(const KfState& s, double z) { return kf_update(s, z, s.sigma_c); }

} // namespace relaytune
