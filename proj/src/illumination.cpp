#include "facefit/illumination.hpp"

#include "facefit/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>

namespace facefit {

namespace {

const double c0 = 0.5 / std::sqrt(std::numbers::pi);         // Y00
const double c1 = std::sqrt(3.0 / (4.0 * std::numbers::pi));  // band 1
const double c2 = std::sqrt(15.0 / (4.0 * std::numbers::pi)); // xy, yz, xz
const double c3 = std::sqrt(5.0 / (16.0 * std::numbers::pi)); // 3z^2 - 1
const double c4 = std::sqrt(15.0 / (16.0 * std::numbers::pi)); // x^2 - y^2

} // namespace

ShVector sh_basis(const Eigen::Vector3d& normal)
{
    Eigen::Vector3d n = normal;
    const double len = n.norm();
    if (std::abs(len - 1.0) > 1e-6)
    {
        spdlog::debug("sh_basis: normalising non-unit normal (|n| = {})", len);
        n /= len;
    }
    const double x = n.x(), y = n.y(), z = n.z();
    ShVector b;
    b << c0, c1 * y, c1 * z, c1 * x, c2 * x * y, c2 * y * z, c3 * (3.0 * z * z - 1.0), c2 * x * z,
        c4 * (x * x - y * y);
    return b;
}

Eigen::Matrix<double, 9, 3> sh_basis_jacobian(const Eigen::Vector3d& n)
{
    const double x = n.x(), y = n.y(), z = n.z();
    Eigen::Matrix<double, 9, 3> j;
    // clang-format off
    j << 0.0,          0.0,          0.0,
         0.0,          c1,           0.0,
         0.0,          0.0,          c1,
         c1,           0.0,          0.0,
         c2 * y,       c2 * x,       0.0,
         0.0,          c2 * z,       c2 * y,
         0.0,          0.0,          6.0 * c3 * z,
         c2 * z,       0.0,          c2 * x,
         2.0 * c4 * x, -2.0 * c4 * y, 0.0;
    // clang-format on
    return j;
}

double uniform_light_coefficient()
{
    return 1.0 / c0;
}

Eigen::Matrix3Xd shade_vertices(const Eigen::Matrix3Xd& albedo, const Eigen::Matrix3Xd& normals,
                                const ShCoefficients& gamma)
{
    if (albedo.cols() != normals.cols())
        throw_shape_error("normals", static_cast<std::size_t>(albedo.cols()),
                          static_cast<std::size_t>(normals.cols()));
    Eigen::Matrix3Xd shaded(3, albedo.cols());
    for (Eigen::Index v = 0; v < albedo.cols(); ++v)
    {
        const Eigen::Vector3d irradiance = gamma.transpose() * sh_basis(normals.col(v));
        shaded.col(v) = albedo.col(v).cwiseProduct(irradiance);
    }
    return shaded;
}

} // namespace facefit
