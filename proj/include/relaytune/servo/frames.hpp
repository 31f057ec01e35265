#pragma once

#include <Eigen/Dense>

#include "relaytune/core.hpp"

namespace relaytune {

/// Rigid 4x4 homogeneous transform, meters.
class FrameTransform {
public:
    FrameTransform() : m_(Eigen::Matrix4d::Identity()) {}

    /// Throws unless the rotation block is orthonormal with det +1 and the last row is (0,0,0,1).
    explicit FrameTransform(const Eigen::Matrix4d& m) : m_(m) { validate(m_); }

    FrameTransform(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : m_(Eigen::Matrix4d::Identity())
    {
        m_.topLeftCorner<3, 3>() = r;
        m_.topRightCorner<3, 1>() = t;
        validate(m_);
    }

    static FrameTransform translation(const Eigen::Vector3d& t) { return {Eigen::Matrix3d::Identity(), t}; }

    static void validate(const Eigen::Matrix4d& m, double tol = 1e-6)
    {
        require(m.allFinite(), "frame transform: non-finite entries");
        require(m.row(3).isApprox(Eigen::RowVector4d(0, 0, 0, 1), tol) && std::abs(m(3, 3) - 1.0) < tol,
                "frame transform: last row must be (0, 0, 0, 1)");
        const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
        require((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < tol,
                "frame transform: rotation block is not orthonormal");
        require(std::abs(r.determinant() - 1.0) < tol, "frame transform: rotation determinant must be +1");
    }

    [[nodiscard]] const Eigen::Matrix4d& matrix() const { return m_; }
    [[nodiscard]] Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
    [[nodiscard]] Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }

    [[nodiscard]] FrameTransform inverse() const
    {
        const Eigen::Matrix3d rt = rotation().transpose();
        return {rt, -rt * translation()};
    }

    FrameTransform operator*(const FrameTransform& o) const
    {
        FrameTransform t;
        t.m_ = m_ * o.m_;
        t.m_.row(3) << 0, 0, 0, 1;
        return t;
    }

    [[nodiscard]] Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation() * p + translation(); }

private:
    Eigen::Matrix4d m_;
};

/// Pinhole intrinsics: principal point (c_u, c_v) and focal length f in pixels, aspect ratio alpha.
struct CameraIntrinsics {
    double cu = 0.0;
    double cv = 0.0;
    double f = 1.0;
    double alpha = 1.0;

    void validate() const
    {
        require(std::isfinite(cu) && std::isfinite(cv), "camera intrinsics: principal point must be finite");
        require(std::isfinite(f) && f > 0.0, "camera intrinsics: focal length must be positive");
        require(std::isfinite(alpha) && alpha > 0.0, "camera intrinsics: aspect ratio must be positive");
    }
};

/// Normalized image coordinates of a point. The optical axis is camera x.
struct ImagePoint {
    double py = 0.0;
    double pz = 0.0;
};

struct PixelPoint {
    double ox = 0.0;
    double oy = 0.0;
};

inline ImagePoint project(const CameraIntrinsics& intr, const Eigen::Vector3d& c)
{
    intr.validate();
    require(c.allFinite(), "project: non-finite point");
    require(c.x() > 0.0, "project: point is behind camera");
    return {c.y() / c.x(), c.z() / c.x()};
}

inline PixelPoint to_pixels(const CameraIntrinsics& intr, ImagePoint p)
{
    intr.validate();
    return {intr.cu + p.py * intr.f * intr.alpha, intr.cv + p.pz * intr.f};
}

inline ImagePoint from_pixels(const CameraIntrinsics& intr, PixelPoint o)
{
    intr.validate();
    return {(o.ox - intr.cu) / (intr.f * intr.alpha), (o.oy - intr.cv) / intr.f};
}

/// Point on the ray of `p` at depth c_x = depth.
inline Eigen::Vector3d back_project(ImagePoint p, double depth)
{
    require(std::isfinite(depth) && depth > 0.0, "back_project: depth must be positive");
    return depth * Eigen::Vector3d(1.0, p.py, p.pz);
}

/// Servoing error in the servo frame S: e = r_c - d (T_SB T_BC [1, p_y, p_z, 1]).
///
/// The depth scales the transformed homogeneous ray, so a translation in either
/// transform shifts the measured point by depth times the offset.
inline Eigen::Vector3d to_servo_error(ImagePoint p, double depth, const FrameTransform& t_sb,
                                      const FrameTransform& t_bc, const Eigen::Vector3d& r_c)
{
    require(std::isfinite(depth) && depth > 0.0, "to_servo_error: depth must be positive");
    require(std::isfinite(p.py) && std::isfinite(p.pz) && r_c.allFinite(), "to_servo_error: non-finite input");
    FrameTransform::validate(t_sb.matrix());
    FrameTransform::validate(t_bc.matrix());
    const Eigen::Vector4d ray(1.0, p.py, p.pz, 1.0);
    const Eigen::Vector4d q = (t_sb * t_bc).matrix() * ray;
    return r_c - depth * q.head<3>();
}

} // namespace relaytune
