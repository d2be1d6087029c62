#include "facefit/bump_detail.hpp"
#include "facefit/errors.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace facefit;

namespace {

BumpMap random_bump(int w, int h, Rng& rng)
{
    BumpMap b = BumpMap::neutral(w, h, 1.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            b.set_code(r, c, rng.uniform(0.0, 255.0));
    return b;
}

/// Direct transcription of the L1 map + forward-difference loss.
double geo_oracle(const BumpMap& a, const BumpMap& b)
{
    const int w = a.width(), h = a.height();
    const auto d = [&](int r, int c) { return a.code(r, c) - b.code(r, c); };
    double sum = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
        {
            sum += std::abs(d(r, c));
            if (c + 1 < w)
                sum += std::abs(d(r, c + 1) - d(r, c));
            if (r + 1 < h)
                sum += std::abs(d(r + 1, c) - d(r, c));
        }
    return sum;
}

BumpMap flipped(const BumpMap& b)
{
    BumpMap out = b;
    for (int r = 0; r < b.height(); ++r)
        for (int c = 0; c < b.width(); ++c)
            out.set_code(r, c, b.code(r, b.width() - 1 - c));
    return out;
}

} // namespace

TEST_CASE("encoding examples")
{
    CHECK(encode_phi(0.0, 0.3) == 128.0);
    CHECK(encode_phi(0.3, 0.3) == 255.0);
    CHECK(encode_phi(-0.15, 0.3) == doctest::Approx(64.5).epsilon(1e-14));
    CHECK(encode_phi(10.0, 0.3) == 255.0);
    CHECK(encode_phi(-10.0, 0.3) == 0.0);
    CHECK(decode_phi(128.0, 0.3) == 0.0);
    CHECK(decode_phi(255.0, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(decode_phi(255.5, 0.3), Error);
    CHECK_THROWS_AS(decode_phi(-0.1, 0.3), Error);
}

TEST_CASE("offset encoding round trip is exact")
{
    Rng rng(1);
    for (const double delta : {1e-3, 0.02, 0.37, 5.0})
        for (int i = 0; i < 1000; ++i)
        {
            const double x = rng.uniform(-delta, delta);
            CHECK(decode_offset(encode_offset(x, delta), delta) == x);
            CHECK(std::abs(decode_phi(encode_phi(x, delta), delta) - x) <= 4e-16 * delta * 255);
        }
}

TEST_CASE("depth differences round trip through the bump map")
{
    Rng rng(2);
    const int w = 9, h = 7;
    DepthMap base(w, h), detailed(w, h);
    Mask coverage(w, h, 0);
    const double delta = 0.25;
    for (std::size_t i = 0; i < base.size(); ++i)
    {
        base[i] = rng.uniform(5.0, 6.0);
        detailed[i] = base[i] + rng.uniform(-delta, delta);
        coverage[i] = rng.uniform() < 0.7;
        if (!coverage[i])
            base[i] = background_depth;
    }
    const BumpMap bump = bump_from_depths(detailed, base, coverage, delta);
    const DepthMap back = detailed_depth(base, bump);
    for (std::size_t i = 0; i < base.size(); ++i)
    {
        if (coverage[i])
            CHECK(back[i] == detailed[i]);
        else
        {
            CHECK(bump.offsets[i] == 0.0L);
            CHECK(back[i] == background_depth);
        }
    }
}

TEST_CASE("bump examples")
{
    const DepthMap base(1, 1, 10.0);
    const Mask cov(1, 1, 1);
    CHECK(bump_from_depths(DepthMap(1, 1, 10.25), base, cov, 0.5).code(0, 0) == doctest::Approx(191.5).epsilon(1e-14));
    CHECK(bump_from_depths(base, base, cov, 0.5).code(0, 0) == 128.0);
    BumpMap top = BumpMap::neutral(1, 1, 0.5);
    top.set_code(0, 0, 255.0);
    CHECK(detailed_depth(base, top)(0, 0) == doctest::Approx(10.5).epsilon(1e-15));
    CHECK(detailed_depth(base, BumpMap::neutral(1, 1, 0.5))(0, 0) == 10.0);
    CHECK_THROWS_AS(bump_from_depths(DepthMap(2, 1, 0.0), base, cov, 0.5), Error);
}

TEST_CASE("geometry loss matches a loop oracle")
{
    Rng rng(3);
    for (int i = 0; i < 50; ++i)
    {
        const BumpMap a = random_bump(4, 4, rng), b = random_bump(4, 4, rng);
        CHECK(std::abs(geo_loss(a, b) - geo_oracle(a, b)) < 1e-10);
    }
    const BumpMap a = random_bump(6, 5, rng);
    CHECK(geo_loss(a, a) == 0.0);
    BumpMap shifted = a;
    for (auto& o : shifted.offsets)
        o += 0.75L;
    CHECK(geo_loss(shifted, a) == doctest::Approx(0.75 * 30).epsilon(1e-12));
}

TEST_CASE("geometry loss is a metric-like L1 quantity")
{
    Rng rng(4);
    for (int i = 0; i < 50; ++i)
    {
        const BumpMap a = random_bump(7, 5, rng), b = random_bump(7, 5, rng), c = random_bump(7, 5, rng);
        CHECK(geo_loss(a, c) <= geo_loss(a, b) + geo_loss(b, c) + 1e-9);
        CHECK(geo_loss(a, b) == doctest::Approx(geo_loss(flipped(a), flipped(b))).epsilon(1e-12));
        CHECK(geo_loss(a, b) >= 0.0);
    }
    CHECK_THROWS_AS(geo_loss(random_bump(2, 2, rng), random_bump(3, 2, rng)), Error);
}

TEST_CASE("geometry subgradient matches finite differences away from kinks")
{
    Rng rng(5);
    const BumpMap a = random_bump(5, 4, rng), b = random_bump(5, 4, rng);
    const Grid<double> g = geo_loss_gradient(a, b);
    const auto f = [&](const Eigen::VectorXd& x) {
        BumpMap m = a;
        for (std::size_t i = 0; i < m.offsets.size(); ++i)
            m.offsets[i] = static_cast<long double>(x[static_cast<Eigen::Index>(i)]) - 128.0L;
        return geo_loss(m, b);
    };
    Eigen::VectorXd codes(20), analytic(20);
    for (int i = 0; i < 20; ++i)
    {
        codes[i] = a.code(i / 5, i % 5);
        analytic[i] = g[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd numeric = test::numeric_gradient(f, codes, 1e-5);
    CHECK(test::relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("mesh from depth")
{
    const DepthMap flat(3, 3, 4.0);
    const Mask full(3, 3, 1);
    const Mesh m = mesh_from_depth(flat, full, Pose{});
    CHECK(m.vertex_count() == 9);
    CHECK(m.triangles.size() == 8u);
    for (int v = 0; v < 9; ++v)
        CHECK(m.vertices(2, v) == 4.0);

    DepthMap ramp(5, 1);
    for (int c = 0; c < 5; ++c)
        ramp(0, c) = 1.0 + 0.5 * c;
    const Mesh r = mesh_from_depth(ramp, Mask(5, 1, 1), Pose{});
    for (int v = 1; v < r.vertex_count(); ++v)
        CHECK(r.vertices(2, v) > r.vertices(2, v - 1));

    CHECK_THROWS_AS(mesh_from_depth(flat, Mask(3, 3, 0), Pose{}), Error);
}

TEST_CASE("rendering a depth mesh reproduces the depth")
{
    const int w = 20, h = 16;
    DepthMap depth(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            depth(r, c) = 30.0 + std::sin(0.3 * c) + 0.5 * std::cos(0.2 * r);
    const Mask cov(w, h, 1);
    const Pose pose{0.1, -0.2, 0.05, 2.0, Eigen::Vector3d(3.0, -1.0, 20.0)};
    const Mesh mesh = mesh_from_depth(depth, cov, pose);
    const Projection p = project_vertices(as_interleaved(mesh.vertices), pose);
    const RasterResult rr = rasterize(mesh, p.pixels, p.depths, mesh.colors, w, h);
    for (int r = 1; r + 1 < h; ++r)
        for (int c = 1; c + 1 < w; ++c)
            CHECK(std::abs(rr.depth(r, c) - depth(r, c)) < 1e-4);
}

TEST_CASE("default range is two percent of the depth extent")
{
    DepthMap d(2, 2, background_depth);
    d(0, 0) = 3.0;
    d(1, 1) = 8.0;
    Mask cov(2, 2, 0);
    cov(0, 0) = cov(1, 1) = 1;
    CHECK(default_delta_max(d, cov) == doctest::Approx(0.1).epsilon(1e-12));
}
