#pragma once

#include "facefit/morphable_model.hpp"

#include <Eigen/Core>

namespace facefit {

/// 9 real SH coefficients per colour channel, bands 0-2, ordered
/// Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22.
using ShCoefficients = ShMatrix;

using ShVector = Eigen::Matrix<double, 9, 1>;

/// Real spherical-harmonic basis, first entry 1 / (2 sqrt(pi)). Non-unit
/// normals are normalised (logged at debug level).
ShVector sh_basis(const Eigen::Vector3d& normal);

/// d(sh_basis)/d(normal) evaluated at a unit normal (no normalisation term).
Eigen::Matrix<double, 9, 3> sh_basis_jacobian(const Eigen::Vector3d& normal);

/// Band-0 coefficient that makes the irradiance factor exactly 1.
double uniform_light_coefficient();

/// Lambertian SH shading: shaded[v][c] = albedo[v][c] * dot(gamma.col(c), sh_basis(n_v)).
/// No clamping; `albedo` and `normals` are 3 x V.
Eigen::Matrix3Xd shade_vertices(const Eigen::Matrix3Xd& albedo, const Eigen::Matrix3Xd& normals,
                                const ShCoefficients& gamma);

} // namespace facefit
