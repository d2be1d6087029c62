#include "facefit/bump_detail.hpp"

#include "facefit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace facefit {

namespace {

void require_delta(double delta_max)
{
    if (!(delta_max > 0.0) || !std::isfinite(delta_max))
        throw Error(ErrorCode::domain, "delta_max must be a positive finite value");
}

template <typename T>
int sign(T v)
{
    return (v > T(0)) - (v < T(0));
}

} // namespace

BumpMap BumpMap::neutral(int width, int height, double delta_max)
{
    require_delta(delta_max);
    return BumpMap{Grid<long double>(width, height, 0.0L), delta_max};
}

double encode_phi(double displacement, double delta_max)
{
    return static_cast<double>(128.0L + encode_offset(displacement, delta_max));
}

double decode_phi(double code, double delta_max)
{
    require_delta(delta_max);
    if (!(code >= 0.0 && code <= 255.0))
        throw Error(ErrorCode::domain, "bump code " + std::to_string(code) + " outside [0, 255]");
    return decode_offset(static_cast<long double>(code) - 128.0L, delta_max);
}

long double encode_offset(double displacement, double delta_max)
{
    require_delta(delta_max);
    const long double offset = 127.0L * static_cast<long double>(displacement) / delta_max;
    return std::clamp(offset, -128.0L, 127.0L);
}

double decode_offset(long double offset, double delta_max)
{
    return static_cast<double>(offset * delta_max / 127.0L);
}

BumpMap bump_from_depths(const DepthMap& detailed, const DepthMap& base, const Mask& coverage, double delta_max)
{
    require_same_shape(detailed, base, "bump_from_depths");
    require_same_shape(coverage, base, "bump_from_depths coverage");
    BumpMap bump = BumpMap::neutral(base.width(), base.height(), delta_max);
    for (std::size_t i = 0; i < base.size(); ++i)
    {
        if (!coverage[i])
            continue;
        if (!std::isfinite(detailed[i]) || !std::isfinite(base[i]))
            throw Error(ErrorCode::numeric_range,
                        "covered pixel " + std::to_string(i) + " has a non-finite depth");
        bump.offsets[i] = encode_offset(detailed[i] - base[i], delta_max);
    }
    return bump;
}

DepthMap detailed_depth(const DepthMap& base, const BumpMap& bump)
{
    require_same_shape(base, bump.offsets, "detailed_depth");
    DepthMap out = base;
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        if (std::isfinite(base[i]))
            out[i] = base[i] + decode_offset(bump.offsets[i], bump.delta_max);
    }
    return out;
}

double geo_loss(const BumpMap& estimated, const BumpMap& truth)
{
    require_same_shape(estimated.offsets, truth.offsets, "geo_loss");
    const int w = estimated.width(), h = estimated.height();
    const auto r = [&](int row, int col) { return estimated.offsets(row, col) - truth.offsets(row, col); };
    long double total = 0.0L;
    for (int row = 0; row < h; ++row)
    {
        for (int col = 0; col < w; ++col)
        {
            const long double here = r(row, col);
            total += std::abs(here);
            if (col + 1 < w)
                total += std::abs(r(row, col + 1) - here);
            if (row + 1 < h)
                total += std::abs(r(row + 1, col) - here);
        }
    }
    return static_cast<double>(total);
}

Grid<double> geo_loss_gradient(const BumpMap& estimated, const BumpMap& truth)
{
    require_same_shape(estimated.offsets, truth.offsets, "geo_loss_gradient");
    const int w = estimated.width(), h = estimated.height();
    const auto r = [&](int row, int col) { return estimated.offsets(row, col) - truth.offsets(row, col); };
    Grid<double> grad(w, h, 0.0);
    for (int row = 0; row < h; ++row)
    {
        for (int col = 0; col < w; ++col)
        {
            const long double here = r(row, col);
            grad(row, col) += sign(here);
            if (col + 1 < w)
            {
                const int s = sign(r(row, col + 1) - here);
                grad(row, col + 1) += s;
                grad(row, col) -= s;
            }
            if (row + 1 < h)
            {
                const int s = sign(r(row + 1, col) - here);
                grad(row + 1, col) += s;
                grad(row, col) -= s;
            }
        }
    }
    return grad;
}

double default_delta_max(const DepthMap& base, const Mask& coverage)
{
    require_same_shape(base, coverage, "default_delta_max");
    double lo = background_depth, hi = -background_depth;
    for (std::size_t i = 0; i < base.size(); ++i)
    {
        if (coverage[i] && std::isfinite(base[i]))
        {
            lo = std::min(lo, base[i]);
            hi = std::max(hi, base[i]);
        }
    }
    if (!(hi >= lo))
        throw Error(ErrorCode::empty_surface, "no covered pixels to derive delta_max from");
    const double extent = hi - lo;
    return extent > 0.0 ? 0.02 * extent : 1e-3;
}

Mesh mesh_from_depth(const DepthMap& depth, const Mask& coverage, const Pose& pose, const ProjectionMatrix& pr,
                     const ImageRGB* colors)
{
    require_same_shape(depth, coverage, "mesh_from_depth");
    if (colors)
        require_same_shape(*colors, depth, "mesh_from_depth colors");

    const int w = depth.width(), h = depth.height();
    Grid<int> vertex_of(w, h, -1);
    int count = 0;
    for (std::size_t i = 0; i < depth.size(); ++i)
    {
        if (coverage[i] && std::isfinite(depth[i]))
            vertex_of[i] = count++;
    }
    if (count == 0)
        throw Error(ErrorCode::empty_surface, "mesh_from_depth: no covered pixels");

    Mesh mesh;
    mesh.vertices.resize(3, count);
    mesh.colors.resize(3, count);
    for (int row = 0; row < h; ++row)
    {
        for (int col = 0; col < w; ++col)
        {
            const int v = vertex_of(row, col);
            if (v < 0)
                continue;
            mesh.vertices.col(v) = back_project(Eigen::Vector2d(col + 0.5, row + 0.5), depth(row, col), pose, pr);
            mesh.colors.col(v) =
                colors ? Eigen::Vector3d((*colors)(row, col).cwiseMax(0.0).cwiseMin(1.0)) : Eigen::Vector3d::Constant(0.5);
        }
    }

    // Winding is chosen so that face normals point towards the camera (-z).
    for (int row = 0; row + 1 < h; ++row)
    {
        for (int col = 0; col + 1 < w; ++col)
        {
            const int tl = vertex_of(row, col), tr = vertex_of(row, col + 1);
            const int bl = vertex_of(row + 1, col), br = vertex_of(row + 1, col + 1);
            const int present = (tl >= 0) + (tr >= 0) + (bl >= 0) + (br >= 0);
            if (present == 4)
            {
                mesh.triangles.push_back({tl, bl, tr});
                mesh.triangles.push_back({tr, bl, br});
            }
            else if (present == 3)
            {
                if (tl < 0)
                    mesh.triangles.push_back({tr, bl, br});
                else if (tr < 0)
                    mesh.triangles.push_back({tl, bl, br});
                else if (bl < 0)
                    mesh.triangles.push_back({tl, br, tr});
                else
                    mesh.triangles.push_back({tl, bl, tr});
            }
        }
    }
    mesh.normals = vertex_normals(mesh.vertices, mesh.triangles).normals;
    return mesh;
}

} // namespace facefit
