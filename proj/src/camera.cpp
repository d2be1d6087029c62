#include "facefit/camera.hpp"

#include "facefit/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace facefit {

namespace {

Eigen::Matrix3d rot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << 1, 0, 0, 0, c, -s, 0, s, c).finished();
}

Eigen::Matrix3d rot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << c, 0, s, 0, 1, 0, -s, 0, c).finished();
}

Eigen::Matrix3d rot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << c, -s, 0, s, c, 0, 0, 0, 1).finished();
}

Eigen::Matrix3d drot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << 0, 0, 0, 0, -s, -c, 0, c, -s).finished();
}

Eigen::Matrix3d drot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << -s, 0, c, 0, 0, 0, -c, 0, -s).finished();
}

Eigen::Matrix3d drot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return (Eigen::Matrix3d() << -s, -c, 0, c, -s, 0, 0, 0, 0).finished();
}

void require_positive_scale(const Pose& pose)
{
    if (!(pose.f > 0.0))
        throw Error(ErrorCode::domain, "pose scale factor f must be > 0, got " + std::to_string(pose.f));
}

} // namespace

Eigen::Matrix3d rotation_from_euler(double pitch, double yaw, double roll)
{
    return rot_z(roll) * rot_y(yaw) * rot_x(pitch);
}

std::array<Eigen::Matrix3d, 3> rotation_derivatives(double pitch, double yaw, double roll)
{
    const Eigen::Matrix3d rx = rot_x(pitch), ry = rot_y(yaw), rz = rot_z(roll);
    return {rz * ry * drot_x(pitch), rz * drot_y(yaw) * rx, drot_z(roll) * ry * rx};
}

Projection project_vertices(const Eigen::VectorXd& points, const Pose& pose, const ProjectionMatrix& pr)
{
    require_positive_scale(pose);
    if (points.size() % 3 != 0)
        throw Error(ErrorCode::shape, "point vector length must be a multiple of 3");
    const Eigen::Index v = points.size() / 3;
    const Eigen::Matrix3d r = rotation_from_euler(pose.pitch, pose.yaw, pose.roll);
    const Eigen::Vector3d t_cam(0.0, 0.0, pose.t2d.z());
    const Eigen::Vector2d t_img = pose.t2d.head<2>();
    const Eigen::Matrix<double, 2, 3> fp = pose.f * pr.rows;

    Projection out{Eigen::Matrix2Xd(2, v), Eigen::VectorXd(v)};
    for (Eigen::Index i = 0; i < v; ++i)
    {
        const Eigen::Vector3d cam = r * points.segment<3>(3 * i) + t_cam;
        out.pixels.col(i) = fp * cam + t_img;
        out.depths[i] = cam.z();
        if (!out.pixels.col(i).allFinite() || !std::isfinite(out.depths[i]))
            throw Error(ErrorCode::numeric_range, "projection of vertex " + std::to_string(i) + " is not finite");
    }
    return out;
}

Eigen::Matrix<double, 2, 7> projection_pose_jacobian(const Eigen::Vector3d& point, const Pose& pose,
                                                     const ProjectionMatrix& pr)
{
    require_positive_scale(pose);
    const Eigen::Matrix3d r = rotation_from_euler(pose.pitch, pose.yaw, pose.roll);
    const auto dr = rotation_derivatives(pose.pitch, pose.yaw, pose.roll);
    const Eigen::Vector3d cam = r * point + Eigen::Vector3d(0.0, 0.0, pose.t2d.z());

    Eigen::Matrix<double, 2, 7> j;
    for (int a = 0; a < 3; ++a)
        j.col(a) = pose.f * pr.rows * (dr[a] * point);
    j.col(3) = pr.rows * cam;
    j.col(4) = Eigen::Vector2d(1.0, 0.0);
    j.col(5) = Eigen::Vector2d(0.0, 1.0);
    j.col(6) = pose.f * pr.rows.col(2);
    return j;
}

void accumulate_rotation_gradient(const std::array<Eigen::Matrix3d, 3>& dR, const Eigen::Vector3d& x,
                                  const Eigen::Vector3d& grad_y, Eigen::Vector3d& grad_angles)
{
    for (int a = 0; a < 3; ++a)
        grad_angles[a] += grad_y.dot(dR[a] * x);
}

Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth, const Pose& pose,
                             const ProjectionMatrix& pr)
{
    require_positive_scale(pose);
    const Eigen::Matrix2d a = pr.rows.leftCols<2>();
    if (std::abs(a.determinant()) < 1e-12)
        throw Error(ErrorCode::domain, "projection matrix x/y block is singular; cannot back-project");
    const Eigen::Vector2d rhs = (pixel - pose.t2d.head<2>()) / pose.f - pr.rows.col(2) * depth;
    const Eigen::Vector2d xy = a.inverse() * rhs;
    const Eigen::Vector3d cam(xy.x(), xy.y(), depth - pose.t2d.z());
    return rotation_from_euler(pose.pitch, pose.yaw, pose.roll).transpose() * cam;
}

} // namespace facefit
