#include "facefit/rasterizer.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace facefit;

namespace {

Eigen::Matrix3Xd grey(int n)
{
    return Eigen::Matrix3Xd::Constant(3, n, 0.5);
}

/// Two triangles covering [0, w] x [0, h] at constant depth.
RasterResult full_quad(int w, int h, double depth)
{
    Eigen::Matrix2Xd p(2, 4);
    p << 0, w, w, 0, 0, 0, h, h;
    const std::vector<Triangle> tris{{0, 1, 2}, {0, 2, 3}};
    return rasterize(tris, p, Eigen::VectorXd::Constant(4, depth), grey(4), w, h);
}

} // namespace

TEST_CASE("full-viewport quad covers every pixel once")
{
    const RasterResult r = full_quad(16, 12, 5.0);
    CHECK(r.stats.covered_pixels == 16u * 12u);
    CHECK(count_set(r.buffer.coverage) == 16u * 12u);
    for (double d : r.depth)
        CHECK(std::abs(d - 5.0) < 1e-12);
    for (const auto& c : r.buffer.color)
        CHECK((c - Eigen::Vector3d::Constant(0.5)).norm() < 1e-15);
    for (const auto& b : r.buffer.bary)
        CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shared edge pixels are covered exactly once")
{
    // Diagonal through pixel centres: (0,0)-(8,8) passes every (k+0.5, k+0.5).
    Eigen::Matrix2Xd p(2, 4);
    p << 0, 8, 8, 0, 0, 0, 8, 8;
    const std::vector<Triangle> tris{{0, 1, 2}, {0, 2, 3}};
    const RasterResult r = rasterize(tris, p, Eigen::VectorXd::Constant(4, 1.0), grey(4), 8, 8);
    CHECK(count_set(r.buffer.coverage) == 64u);
    // Render each triangle alone; coverage must partition the square.
    const std::vector<Triangle> a{tris[0]}, b{tris[1]};
    const RasterResult ra = rasterize(a, p, Eigen::VectorXd::Constant(4, 1.0), grey(4), 8, 8);
    const RasterResult rb = rasterize(b, p, Eigen::VectorXd::Constant(4, 1.0), grey(4), 8, 8);
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(ra.buffer.coverage[i] + rb.buffer.coverage[i] == 1);
}

TEST_CASE("nearest triangle wins regardless of draw order")
{
    Eigen::Matrix2Xd p(2, 6);
    p << 0, 10, 0, 0, 10, 0, 0, 0, 10, 0, 0, 10;
    Eigen::VectorXd z(6);
    z << 5, 5, 5, 2, 2, 2;
    Eigen::Matrix3Xd colors(3, 6);
    colors.leftCols(3).setConstant(1.0);
    colors.rightCols(3).setZero();
    for (const auto& tris : {std::vector<Triangle>{{0, 1, 2}, {3, 4, 5}}, std::vector<Triangle>{{3, 4, 5}, {0, 1, 2}}})
    {
        const RasterResult r = rasterize(tris, p, z, colors, 10, 10);
        CHECK(r.depth(1, 1) == doctest::Approx(2.0));
        CHECK(r.buffer.color(1, 1).norm() == 0.0);
    }
}

TEST_CASE("equal depths go to the lower triangle index")
{
    Eigen::Matrix2Xd p(2, 3);
    p << 0, 10, 0, 0, 0, 10;
    const std::vector<Triangle> tris{{0, 1, 2}, {0, 1, 2}};
    const RasterResult r = rasterize(tris, p, Eigen::VectorXd::Constant(3, 1.0), grey(3), 10, 10);
    CHECK(r.buffer.tri_index(1, 1) == 0);
}

TEST_CASE("slanted plane depth is interpolated exactly")
{
    const auto plane = [](double x, double y) { return 3.0 + 0.1 * x - 0.05 * y; };
    Eigen::Matrix2Xd p(2, 4);
    p << 0, 20, 20, 0, 0, 0, 20, 20;
    Eigen::VectorXd z(4);
    for (int v = 0; v < 4; ++v)
        z[v] = plane(p(0, v), p(1, v));
    const std::vector<Triangle> tris{{0, 1, 2}, {0, 2, 3}};
    const RasterResult r = rasterize(tris, p, z, grey(4), 20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            CHECK(std::abs(r.depth(i, j) - plane(j + 0.5, i + 0.5)) < 1e-6);
}

TEST_CASE("uncovered pixels keep background values")
{
    Eigen::Matrix2Xd p(2, 3);
    p << 0, 4, 0, 0, 0, 4;
    const std::vector<Triangle> tris{{0, 1, 2}};
    const RasterResult r = rasterize(tris, p, Eigen::VectorXd::Constant(3, 1.0), grey(3), 10, 10);
    CHECK(r.buffer.coverage(9, 9) == 0);
    CHECK(r.buffer.tri_index(9, 9) == -1);
    CHECK(r.depth(9, 9) == background_depth);
}

TEST_CASE("degenerate triangles are skipped and counted")
{
    Eigen::Matrix2Xd p(2, 3);
    p << 0, 5, 10, 0, 5, 10;
    const std::vector<Triangle> tris{{0, 1, 2}};
    const RasterResult r = rasterize(tris, p, Eigen::VectorXd::Constant(3, 1.0), grey(3), 10, 10);
    CHECK(r.stats.degenerate_triangles == 1u);
    CHECK(count_set(r.buffer.coverage) == 0u);
}

TEST_CASE("rasterization is deterministic")
{
    const Mesh sphere = icosphere(3);
    const Eigen::Matrix2Xd p = (sphere.vertices.topRows<2>().array() * 20.0 + 32.0).matrix();
    const Eigen::VectorXd z = sphere.vertices.row(2).transpose().array() + 10.0;
    const RasterResult a = rasterize(sphere, p, z, sphere.colors, 64, 64);
    const RasterResult b = rasterize(sphere, p, z, sphere.colors, 64, 64);
    CHECK(a.buffer.tri_index == b.buffer.tri_index);
    CHECK(a.depth == b.depth);
    CHECK(a.buffer.color == b.buffer.color);
}

TEST_CASE("barycentric weights reproduce the point")
{
    Rng rng(1);
    for (int i = 0; i < 50; ++i)
    {
        const Eigen::Vector2d a = Eigen::Vector2d::Random(), b = Eigen::Vector2d::Random(), c = Eigen::Vector2d::Random();
        const Eigen::Vector2d q = Eigen::Vector2d::Random();
        const Eigen::Vector3d w = barycentric(a, b, c, q);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((w[0] * a + w[1] * b + w[2] * c - q).norm() < 1e-8);
    }
}

TEST_CASE("barycentric VJP matches finite differences")
{
    Rng rng(2);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i)
    {
        Eigen::Matrix<double, 2, 3> v;
        v << 0, 4, 1, 0, 0.5, 3;
        v += 0.3 * Eigen::Matrix<double, 2, 3>::Random();
        const Eigen::Vector2d q(1.5, 1.0);
        const Eigen::Vector3d gw = Eigen::Vector3d::Random();
        Eigen::Vector2d ga = Eigen::Vector2d::Zero(), gb = Eigen::Vector2d::Zero(), gc = Eigen::Vector2d::Zero();
        barycentric_vjp(v.col(0), v.col(1), v.col(2), q, gw, ga, gb, gc);
        Eigen::VectorXd analytic(6), numeric(6);
        analytic << ga, gb, gc;
        for (int k = 0; k < 6; ++k)
        {
            Eigen::Matrix<double, 2, 3> vp = v, vm = v;
            vp(k % 2, k / 2) += h;
            vm(k % 2, k / 2) -= h;
            numeric[k] = (gw.dot(barycentric(vp.col(0), vp.col(1), vp.col(2), q)) -
                          gw.dot(barycentric(vm.col(0), vm.col(1), vm.col(2), q))) /
                         (2 * h);
        }
        CHECK(test::relative_error(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("vertex normals of simple geometry")
{
    // Planar quad in z = 0, counter-clockwise seen from +z.
    Eigen::Matrix3Xd quad(3, 4);
    quad << 0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0;
    const std::vector<Triangle> tris{{0, 1, 2}, {0, 2, 3}};
    const VertexNormals n = vertex_normals(quad, tris);
    for (int v = 0; v < 4; ++v)
        CHECK((n.normals.col(v) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    CHECK(n.isolated == 0u);

    Eigen::Matrix3Xd tri(3, 4);
    tri << 0, 2, 0, 9, 0, 0, 3, 9, 0, 0, 0, 9;
    const VertexNormals t = vertex_normals(tri, std::vector<Triangle>{{0, 1, 2}});
    CHECK((t.normals.col(0) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    CHECK(t.isolated == 1u);
    CHECK((t.normals.col(3) - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);

    const Mesh sphere = icosphere(3);
    const VertexNormals s = vertex_normals(sphere);
    const double limit = std::cos(2.0 * std::numbers::pi / 180.0);
    for (int v = 0; v < sphere.vertex_count(); ++v)
    {
        CHECK(s.normals.col(v).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.normals.col(v).dot(sphere.vertices.col(v).normalized()) > limit);
    }
}

TEST_CASE("vertex normal VJP matches finite differences")
{
    const Mesh sphere = icosphere(1);
    Rng rng(3);
    Eigen::Matrix3Xd pos = sphere.vertices;
    for (int v = 0; v < pos.cols(); ++v)
        pos.col(v) *= 1.0 + 0.1 * rng.uniform(-1, 1);
    const Eigen::Matrix3Xd g = Eigen::Matrix3Xd::Random(3, pos.cols());
    const Eigen::Matrix3Xd analytic = vertex_normals_vjp(pos, sphere.triangles, g);
    const auto f = [&](const Eigen::VectorXd& x) {
        return (vertex_normals(as_columns(x), sphere.triangles).normals.array() * g.array()).sum();
    };
    const Eigen::VectorXd numeric = test::numeric_gradient(f, as_interleaved(pos));
    CHECK(test::relative_error(as_interleaved(analytic), numeric) < 1e-6);
}
