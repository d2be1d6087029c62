#pragma once

#include "facefit/image.hpp"
#include "facefit/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>

namespace facefit {

/// Camera-space depth per pixel; uncovered pixels hold +infinity.
using DepthMap = Grid<double>;

inline constexpr double background_depth = std::numeric_limits<double>::infinity();

struct RenderBuffer
{
    ImageRGB color;            // interpolated shading, unclamped
    Mask coverage;             // 1 where some triangle covers the pixel centre
    Grid<std::int32_t> tri_index; // -1 where uncovered
    Grid<Eigen::Vector3d> bary; // weights of the triangle's vertices in stored order
};

struct RasterStats
{
    std::size_t degenerate_triangles = 0;
    std::size_t covered_pixels = 0;
};

struct RasterResult
{
    RenderBuffer buffer;
    DepthMap depth;
    RasterStats stats;
};

/**
 * Z-buffer rasterization with pixel (row i, col j) sampled at (j + 0.5, i + 0.5).
 *
 * Edges use a top-left fill rule so pixels on an edge shared by two
 * triangles are covered exactly once. The nearest interpolated depth wins;
 * ties within 1e-12 go to the lower triangle index. Depth and colour are
 * interpolated linearly in screen space. Zero-area triangles are skipped
 * and counted.
 */
RasterResult rasterize(std::span<const Triangle> triangles, const Eigen::Matrix2Xd& projected,
                       const Eigen::VectorXd& camera_depths, const Eigen::Matrix3Xd& shaded, int width, int height);

inline RasterResult rasterize(const Mesh& mesh, const Eigen::Matrix2Xd& projected,
                              const Eigen::VectorXd& camera_depths, const Eigen::Matrix3Xd& shaded, int width,
                              int height)
{
    return rasterize(mesh.triangles, projected, camera_depths, shaded, width, height);
}

/// Barycentric weights of `p` in triangle (a, b, c); weights sum to 1.
Eigen::Vector3d barycentric(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                            const Eigen::Vector2d& p);

/// Pullback of dL/d(weights) to dL/d(a, b, c) with `p` held fixed.
void barycentric_vjp(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                     const Eigen::Vector2d& p, const Eigen::Vector3d& grad_weights, Eigen::Vector2d& grad_a,
                     Eigen::Vector2d& grad_b, Eigen::Vector2d& grad_c);

struct VertexNormals
{
    Eigen::Matrix3Xd normals;
    std::size_t isolated = 0; // vertices with no incident area, assigned +z
};

/// Area-weighted average of incident face normals, normalised.
VertexNormals vertex_normals(const Eigen::Matrix3Xd& positions, std::span<const Triangle> triangles);

inline VertexNormals vertex_normals(const Mesh& mesh)
{
    return vertex_normals(mesh.vertices, mesh.triangles);
}

/// Pullback of dL/d(normals) to dL/d(positions) for vertex_normals.
Eigen::Matrix3Xd vertex_normals_vjp(const Eigen::Matrix3Xd& positions, std::span<const Triangle> triangles,
                                    const Eigen::Matrix3Xd& grad_normals);

} // namespace facefit
