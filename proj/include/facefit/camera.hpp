#pragma once

#include "facefit/morphable_model.hpp"

#include <Eigen/Core>

namespace facefit {

/// 2x3 projection P_r. The default selects camera-space (x, y).
struct ProjectionMatrix
{
    Eigen::Matrix<double, 2, 3> rows = (Eigen::Matrix<double, 2, 3>() << 1, 0, 0, 0, 1, 0).finished();

    static ProjectionMatrix orthographic() { return {}; }
};

/**
 * R = R_z(roll) * R_y(yaw) * R_x(pitch), right-handed, each factor the
 * standard active rotation about its axis.
 */
Eigen::Matrix3d rotation_from_euler(double pitch, double yaw, double roll);

/// dR/d(pitch), dR/d(yaw), dR/d(roll).
std::array<Eigen::Matrix3d, 3> rotation_derivatives(double pitch, double yaw, double roll);

/// Vertex positions after projection, plus the camera-space depth of each
/// vertex (z of R * P + t_z), which the rasterizer uses for the z-buffer.
struct Projection
{
    Eigen::Matrix2Xd pixels;
    Eigen::VectorXd depths;
};

/**
 * V_2d(P) = f * P_r * (R * P + (0, 0, t_z)) + (t_x, t_y).
 *
 * `points` is an interleaved 3V-vector. Throws Error(numeric_range) naming
 * the first vertex whose projection is not finite, and Error(domain) if f <= 0.
 */
Projection project_vertices(const Eigen::VectorXd& points, const Pose& pose,
                            const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

/// Jacobian of one projected point with respect to (pitch, yaw, roll, f, t_x, t_y, t_z).
Eigen::Matrix<double, 2, 7> projection_pose_jacobian(const Eigen::Vector3d& point, const Pose& pose,
                                                     const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

/// Gradient of a scalar through one application of the rotation R (y = R x).
/// Adds dL/dangles given dL/dy and x.
void accumulate_rotation_gradient(const std::array<Eigen::Matrix3d, 3>& dR, const Eigen::Vector3d& x,
                                  const Eigen::Vector3d& grad_y, Eigen::Vector3d& grad_angles);

/**
 * Inverse of the camera for one pixel with known camera-space depth:
 * recovers the model-space point that projects to `pixel` at `depth`.
 * Throws Error(domain) if the x/y columns of P_r are singular.
 */
Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth, const Pose& pose,
                             const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

} // namespace facefit
