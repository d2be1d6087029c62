#include "facefit/edge_effectiveness.hpp"
#include "facefit/errors.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace facefit;

namespace {

DistanceField brute_force(const EdgeLinesMap& map, double threshold)
{
    DistanceField out(map.width(), map.height(), std::numeric_limits<double>::infinity());
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c)
            for (int er = 0; er < map.height(); ++er)
                for (int ec = 0; ec < map.width(); ++ec)
                    if (map(er, ec) >= threshold)
                        out(r, c) = std::min(out(r, c), std::sqrt(double((r - er) * (r - er) + (c - ec) * (c - ec))));
    return out;
}

} // namespace

TEST_CASE("distance field examples")
{
    EdgeLinesMap m(3, 3, 0.0);
    m(0, 0) = 1.0;
    const DistanceField d = distance_field(m, 0.5);
    CHECK(d(2, 2) == 2.0 * std::sqrt(2.0));
    CHECK(d(0, 0) == 0.0);
    CHECK(d(0, 2) == 2.0);

    for (double v : distance_field(EdgeLinesMap(4, 5, 1.0), 0.5))
        CHECK(v == 0.0);
    CHECK_THROWS_AS(distance_field(EdgeLinesMap(4, 4, 0.2), 0.5), Error);
}

TEST_CASE("distance field equals brute force")
{
    Rng rng(1);
    for (int size : {1, 5, 16, 23, 32})
        for (int trial = 0; trial < 5; ++trial)
        {
            EdgeLinesMap m(size, size + trial % 3);
            const double density = rng.uniform(0.005, 0.3);
            for (auto& v : m)
                v = rng.uniform() < density ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.49);
            m(0, 0) = 0.7; // non-empty
            CHECK(distance_field(m, 0.5) == brute_force(m, 0.5));
        }
}

TEST_CASE("label counting example")
{
    DistanceField field(10, 1);
    CoordinateSet coords;
    for (int c = 0; c < 10; ++c)
    {
        field(0, c) = c < 6 ? 1.0 : 3.0;
        coords.push_back({c, 0});
    }
    CHECK(effective_fraction(coords, field, 2.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(ground_truth_label(coords, field, 2.0, 0.5) == 1);
    CHECK(ground_truth_label(coords, field, 2.0, 0.7) == 0);
    CHECK(ground_truth_label(coords, field, 0.5, 0.1) == 0);
    CHECK(ground_truth_label(coords, DistanceField(10, 1, 0.0), 1e-9, 1.0) == 1);
    CHECK_THROWS_AS(ground_truth_label({}, field, 2.0, 0.5), Error);
    CHECK_THROWS_AS(ground_truth_label({{10, 0}}, field, 2.0, 0.5), Error);
}

TEST_CASE("label is monotone and permutation invariant")
{
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial)
    {
        DistanceField field(12, 12);
        for (auto& v : field)
            v = rng.uniform(0.0, 6.0);
        CoordinateSet coords;
        const int n = 1 + static_cast<int>(rng.uniform(0.0, 30.0));
        for (int i = 0; i < n; ++i)
            coords.push_back({static_cast<int>(rng.uniform(0, 11.99)), static_cast<int>(rng.uniform(0, 11.99))});
        const double theta = rng.uniform(0.0, 6.0), delta = rng.uniform();
        const int label = ground_truth_label(coords, field, theta, delta);
        if (label == 1)
        {
            CHECK(ground_truth_label(coords, field, theta + rng.uniform(), delta) == 1);
            CHECK(ground_truth_label(coords, field, theta, delta * rng.uniform()) == 1);
        }
        std::reverse(coords.begin(), coords.end());
        std::swap(coords.front(), coords[coords.size() / 2]);
        CHECK(ground_truth_label(coords, field, theta, delta) == label);
    }
}

TEST_CASE("discriminator and adversarial values")
{
    CHECK(std::abs(discriminator_loss(0.9, 1, 0.8) - 0.117783) < 1e-5);
    CHECK(discriminator_loss(0.9, 1, 0.8) == doctest::Approx(std::log(0.9) - std::log(0.8)).epsilon(1e-15));
    CHECK(discriminator_loss(1.0, 1, 1.0) == 0.0);
    CHECK(std::abs(adversarial_loss(0.5) + 0.693147) < 1e-6);
    CHECK(adversarial_loss(0.0) == 0.0);
    CHECK(adversarial_loss(1.0 - 2e-7) == doctest::Approx(std::log(2e-7)).epsilon(1e-6));

    const std::vector<double> gen{0.9, 0.9}, real{0.8, 0.8};
    const std::vector<int> labels{1, 1};
    CHECK(discriminator_loss(gen, labels, real) == doctest::Approx(discriminator_loss(0.9, 1, 0.8)).epsilon(1e-15));
    const std::vector<double> adv{0.5, 0.5};
    CHECK(adversarial_loss(adv) == doctest::Approx(adversarial_loss(0.5)).epsilon(1e-15));
}

TEST_CASE("discriminator loss is minimised at agreement")
{
    for (const int label : {0, 1})
    {
        const double best = discriminator_loss(static_cast<double>(label), label, 0.6);
        for (double d = 0.0; d <= 0.99; d += 0.01)
            CHECK(discriminator_loss(label == 0 ? d : 1.0 - d, label, 0.6) <= best);
    }
}

TEST_CASE("saturating arguments raise with the clamped value")
{
    try
    {
        discriminator_loss(0.0, 1, 0.5);
        FAIL("expected saturation");
    }
    catch (const SaturationError& e)
    {
        CHECK(e.code() == ErrorCode::saturation);
        CHECK(e.clamped_value() == doctest::Approx(std::log(log_epsilon) - std::log(0.5)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(discriminator_loss(0.5, 1, 0.0), SaturationError);
    try
    {
        adversarial_loss(1.0);
        FAIL("expected saturation");
    }
    catch (const SaturationError& e)
    {
        CHECK(e.clamped_value() == doctest::Approx(std::log(log_epsilon)).epsilon(1e-12));
    }
}

TEST_CASE("edge map mean squared error")
{
    Rng rng(3);
    EdgeLinesMap a(8, 8), b(8, 8);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        a[i] = rng.uniform();
        b[i] = rng.uniform();
    }
    double oracle = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        oracle += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::abs(edge_mse(a, b) - oracle / 64.0) < 1e-12);
    CHECK(edge_mse(a, a) == 0.0);
    CHECK(edge_mse(EdgeLinesMap(3, 3, 0.0), EdgeLinesMap(3, 3, 1.0)) == 1.0);
    CHECK_THROWS_AS(edge_mse(a, EdgeLinesMap(7, 8)), Error);
}
