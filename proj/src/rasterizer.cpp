#include "facefit/rasterizer.hpp"

#include "facefit/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <string>

namespace facefit {

namespace {

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v)
{
    return u.x() * v.y() - u.y() * v.x();
}

bool lex_less(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

/// Edge function of the directed edge a->b at p. Always evaluated from the
/// lexicographically smaller endpoint so that E(a, b, p) == -E(b, a, p)
/// bit-for-bit, which keeps coverage of shared edges exact.
double edge_function(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    if (lex_less(b, a))
        return -cross2(a - b, p - b);
    return cross2(b - a, p - a);
}

/// Top-left rule for a positively oriented triangle (x right, y down).
bool is_top_left(const Eigen::Vector2d& from, const Eigen::Vector2d& to)
{
    const Eigen::Vector2d d = to - from;
    return d.y() < 0.0 || (d.y() == 0.0 && d.x() > 0.0);
}

bool inside(double e, bool top_left)
{
    return e > 0.0 || (e == 0.0 && top_left);
}

void cross_partials(const Eigen::Vector2d& u, const Eigen::Vector2d& v, Eigen::Vector2d& du, Eigen::Vector2d& dv)
{
    du = Eigen::Vector2d(v.y(), -v.x());
    dv = Eigen::Vector2d(-u.y(), u.x());
}

} // namespace

RasterResult rasterize(std::span<const Triangle> triangles, const Eigen::Matrix2Xd& projected,
                       const Eigen::VectorXd& camera_depths, const Eigen::Matrix3Xd& shaded, int width, int height)
{
    if (width < 1 || height < 1)
        throw Error(ErrorCode::domain, "raster size must be at least 1x1");
    const Eigen::Index v = projected.cols();
    if (camera_depths.size() != v)
        throw_shape_error("camera_depths", static_cast<std::size_t>(v), static_cast<std::size_t>(camera_depths.size()));
    if (shaded.cols() != v)
        throw_shape_error("shaded", static_cast<std::size_t>(v), static_cast<std::size_t>(shaded.cols()));

    RasterResult out;
    out.buffer.color = ImageRGB(width, height, Eigen::Vector3d::Zero());
    out.buffer.coverage = Mask(width, height, 0);
    out.buffer.tri_index = Grid<std::int32_t>(width, height, -1);
    out.buffer.bary = Grid<Eigen::Vector3d>(width, height, Eigen::Vector3d::Zero());
    out.depth = DepthMap(width, height, background_depth);

    for (std::size_t t = 0; t < triangles.size(); ++t)
    {
        const Triangle& tri = triangles[t];
        for (int idx : tri)
        {
            if (idx < 0 || idx >= v)
                throw Error(ErrorCode::domain,
                            "triangle " + std::to_string(t) + " references vertex " + std::to_string(idx));
        }
        // Local order with positive screen-space orientation.
        std::array<int, 3> local{0, 1, 2};
        Eigen::Vector2d p0 = projected.col(tri[0]);
        Eigen::Vector2d p1 = projected.col(tri[1]);
        Eigen::Vector2d p2 = projected.col(tri[2]);
        const double area = cross2(p1 - p0, p2 - p0);
        if (!std::isfinite(area) || std::abs(area) < 1e-12)
        {
            ++out.stats.degenerate_triangles;
            continue;
        }
        if (area < 0.0)
        {
            std::swap(p1, p2);
            std::swap(local[1], local[2]);
        }
        const bool tl0 = is_top_left(p1, p2); // edge opposite local vertex 0
        const bool tl1 = is_top_left(p2, p0);
        const bool tl2 = is_top_left(p0, p1);

        const double min_x = std::min({p0.x(), p1.x(), p2.x()});
        const double max_x = std::max({p0.x(), p1.x(), p2.x()});
        const double min_y = std::min({p0.y(), p1.y(), p2.y()});
        const double max_y = std::max({p0.y(), p1.y(), p2.y()});
        const int col_begin = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
        const int col_end = std::min(width - 1, static_cast<int>(std::floor(max_x - 0.5)));
        const int row_begin = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
        const int row_end = std::min(height - 1, static_cast<int>(std::floor(max_y - 0.5)));

        for (int row = row_begin; row <= row_end; ++row)
        {
            for (int col = col_begin; col <= col_end; ++col)
            {
                const Eigen::Vector2d p(col + 0.5, row + 0.5);
                const double e0 = edge_function(p1, p2, p);
                const double e1 = edge_function(p2, p0, p);
                const double e2 = edge_function(p0, p1, p);
                if (!inside(e0, tl0) || !inside(e1, tl1) || !inside(e2, tl2))
                    continue;
                const double sum = e0 + e1 + e2;
                Eigen::Vector3d w;
                w[local[0]] = e0 / sum;
                w[local[1]] = e1 / sum;
                w[local[2]] = e2 / sum;
                const double z = w[0] * camera_depths[tri[0]] + w[1] * camera_depths[tri[1]] +
                                 w[2] * camera_depths[tri[2]];
                double& zbuf = out.depth(row, col);
                if (!(z < zbuf - 1e-12))
                    continue;
                zbuf = z;
                out.buffer.coverage(row, col) = 1;
                out.buffer.tri_index(row, col) = static_cast<std::int32_t>(t);
                out.buffer.bary(row, col) = w;
                out.buffer.color(row, col) =
                    w[0] * shaded.col(tri[0]) + w[1] * shaded.col(tri[1]) + w[2] * shaded.col(tri[2]);
            }
        }
    }
    out.stats.covered_pixels = count_set(out.buffer.coverage);
    return out;
}

Eigen::Vector3d barycentric(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                            const Eigen::Vector2d& p)
{
    const double e0 = cross2(c - b, p - b);
    const double e1 = cross2(a - c, p - c);
    const double e2 = cross2(b - a, p - a);
    const double area = cross2(b - a, c - a);
    return Eigen::Vector3d(e0, e1, e2) / area;
}

void barycentric_vjp(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                     const Eigen::Vector2d& p, const Eigen::Vector3d& grad_weights, Eigen::Vector2d& grad_a,
                     Eigen::Vector2d& grad_b, Eigen::Vector2d& grad_c)
{
    const double area = cross2(b - a, c - a);
    const Eigen::Vector3d w = barycentric(a, b, c, p);
    Eigen::Vector2d du, dv;

    grad_a.setZero();
    grad_b.setZero();
    grad_c.setZero();

    // e0 = (c - b) x (p - b)
    cross_partials(c - b, p - b, du, dv);
    grad_c += grad_weights[0] / area * du;
    grad_b += grad_weights[0] / area * (-du - dv);
    // e1 = (a - c) x (p - c)
    cross_partials(a - c, p - c, du, dv);
    grad_a += grad_weights[1] / area * du;
    grad_c += grad_weights[1] / area * (-du - dv);
    // e2 = (b - a) x (p - a)
    cross_partials(b - a, p - a, du, dv);
    grad_b += grad_weights[2] / area * du;
    grad_a += grad_weights[2] / area * (-du - dv);
    // area = (b - a) x (c - a)
    const double s = grad_weights.dot(w) / area;
    cross_partials(b - a, c - a, du, dv);
    grad_b -= s * du;
    grad_c -= s * dv;
    grad_a -= s * (-du - dv);
}

VertexNormals vertex_normals(const Eigen::Matrix3Xd& positions, std::span<const Triangle> triangles)
{
    VertexNormals out{Eigen::Matrix3Xd::Zero(3, positions.cols()), 0};
    for (const auto& tri : triangles)
    {
        const Eigen::Vector3d a = positions.col(tri[0]);
        const Eigen::Vector3d n = (positions.col(tri[1]) - a).cross(positions.col(tri[2]) - a);
        for (int idx : tri)
            out.normals.col(idx) += n;
    }
    for (Eigen::Index i = 0; i < out.normals.cols(); ++i)
    {
        const double len = out.normals.col(i).norm();
        if (len > 0.0 && std::isfinite(len))
        {
            out.normals.col(i) /= len;
        }
        else
        {
            out.normals.col(i) = Eigen::Vector3d::UnitZ();
            ++out.isolated;
        }
    }
    return out;
}

Eigen::Matrix3Xd vertex_normals_vjp(const Eigen::Matrix3Xd& positions, std::span<const Triangle> triangles,
                                    const Eigen::Matrix3Xd& grad_normals)
{
    Eigen::Matrix3Xd summed = Eigen::Matrix3Xd::Zero(3, positions.cols());
    for (const auto& tri : triangles)
    {
        const Eigen::Vector3d a = positions.col(tri[0]);
        const Eigen::Vector3d n = (positions.col(tri[1]) - a).cross(positions.col(tri[2]) - a);
        for (int idx : tri)
            summed.col(idx) += n;
    }
    // Through the normalisation n = m / |m|.
    Eigen::Matrix3Xd grad_summed = Eigen::Matrix3Xd::Zero(3, positions.cols());
    for (Eigen::Index i = 0; i < summed.cols(); ++i)
    {
        const double len = summed.col(i).norm();
        if (!(len > 0.0))
            continue;
        const Eigen::Vector3d n = summed.col(i) / len;
        const Eigen::Vector3d g = grad_normals.col(i);
        grad_summed.col(i) = (g - g.dot(n) * n) / len;
    }
    Eigen::Matrix3Xd grad = Eigen::Matrix3Xd::Zero(3, positions.cols());
    for (const auto& tri : triangles)
    {
        const Eigen::Vector3d g = grad_summed.col(tri[0]) + grad_summed.col(tri[1]) + grad_summed.col(tri[2]);
        const Eigen::Vector3d u = positions.col(tri[1]) - positions.col(tri[0]);
        const Eigen::Vector3d v = positions.col(tri[2]) - positions.col(tri[0]);
        const Eigen::Vector3d du = v.cross(g);
        const Eigen::Vector3d dv = g.cross(u);
        grad.col(tri[0]) -= du + dv;
        grad.col(tri[1]) += du;
        grad.col(tri[2]) += dv;
    }
    return grad;
}

} // namespace facefit
