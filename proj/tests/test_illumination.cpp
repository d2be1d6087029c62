#include "facefit/illumination.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace facefit;

namespace {

/// Near-uniform points on the unit sphere (Fibonacci lattice).
std::vector<Eigen::Vector3d> sphere_points(int n)
{
    std::vector<Eigen::Vector3d> pts;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i)
    {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - z * z);
        pts.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
    return pts;
}

} // namespace

TEST_CASE("band-0 value is 1 / (2 sqrt(pi)) for any unit normal")
{
    Rng rng(1);
    for (int i = 0; i < 50; ++i)
        CHECK(sh_basis(test::random_unit(rng))[0] == doctest::Approx(0.282095).epsilon(1e-6));
    CHECK(sh_basis(Eigen::Vector3d(0, 0, 1))[0] == 0.5 / std::sqrt(std::numbers::pi));
}

TEST_CASE("z axis has no x or y band-1 response")
{
    const ShVector y = sh_basis(Eigen::Vector3d(0, 0, 1));
    CHECK(y[1] == 0.0);
    CHECK(y[3] == 0.0);
}

TEST_CASE("basis is orthonormal over the sphere")
{
    const int n = 10000;
    Eigen::Matrix<double, 9, 9> gram = Eigen::Matrix<double, 9, 9>::Zero();
    for (const auto& p : sphere_points(n))
    {
        const ShVector y = sh_basis(p);
        gram += y * y.transpose();
    }
    gram *= 4.0 * std::numbers::pi / n;
    CHECK((gram - Eigen::Matrix<double, 9, 9>::Identity()).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("uniform light reproduces albedo")
{
    CHECK(uniform_light_coefficient() == doctest::Approx(std::sqrt(4.0 * std::numbers::pi)).epsilon(1e-15));
    Rng rng(2);
    const int v = 50;
    Eigen::Matrix3Xd albedo(3, v), normals(3, v);
    for (int i = 0; i < v; ++i)
    {
        albedo.col(i) = Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform());
        normals.col(i) = test::random_unit(rng);
    }
    ShMatrix gamma = ShMatrix::Zero();
    gamma.row(0).setConstant(uniform_light_coefficient());
    CHECK((shade_vertices(albedo, normals, gamma) - albedo).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(shade_vertices(Eigen::Matrix3Xd::Zero(3, v), normals, ShMatrix::Random()).isZero(0.0));
}

TEST_CASE("single band-1 coefficient")
{
    ShMatrix gamma = ShMatrix::Zero();
    gamma.row(2).setConstant(1.0);
    const Eigen::Matrix3Xd albedo = Eigen::Vector3d(0.2, 0.4, 0.6);
    const Eigen::Matrix3Xd normal = Eigen::Vector3d(0, 0, 1);
    const Eigen::Matrix3Xd shaded = shade_vertices(albedo, normal, gamma);
    const double y10 = std::sqrt(3.0 / (4.0 * std::numbers::pi));
    CHECK((shaded.col(0) - y10 * albedo.col(0)).norm() < 1e-15);
}

TEST_CASE("shading is linear in gamma and in albedo")
{
    Rng rng(3);
    const int v = 20;
    Eigen::Matrix3Xd a1 = Eigen::Matrix3Xd::Random(3, v), a2 = Eigen::Matrix3Xd::Random(3, v), n(3, v);
    for (int i = 0; i < v; ++i)
        n.col(i) = test::random_unit(rng);
    const ShMatrix g1 = ShMatrix::Random(), g2 = ShMatrix::Random();
    const double s = 0.7, t = -1.9;
    CHECK((shade_vertices(a1, n, s * g1 + t * g2) - (s * shade_vertices(a1, n, g1) + t * shade_vertices(a1, n, g2)))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((shade_vertices(s * a1 + t * a2, n, g1) - (s * shade_vertices(a1, n, g1) + t * shade_vertices(a2, n, g1)))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("gradient with respect to gamma is albedo times basis")
{
    Rng rng(4);
    const Eigen::Matrix3Xd albedo = Eigen::Vector3d(0.3, 0.5, 0.9);
    const Eigen::Matrix3Xd normal = test::random_unit(rng);
    const ShMatrix gamma = ShMatrix::Random();
    const ShVector y = sh_basis(normal.col(0));
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 9; ++k)
        {
            ShMatrix gp = gamma, gm = gamma;
            gp(k, c) += h;
            gm(k, c) -= h;
            const double fd = (shade_vertices(albedo, normal, gp)(c, 0) - shade_vertices(albedo, normal, gm)(c, 0)) / (2 * h);
            const double exact = albedo(c, 0) * y[k];
            CHECK(std::abs(fd - exact) <= 1e-6 * std::max(std::abs(exact), 1e-3));
        }
}

TEST_CASE("basis Jacobian matches finite differences")
{
    Rng rng(5);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Vector3d n = test::random_unit(rng);
        const auto J = sh_basis_jacobian(n);
        for (int k = 0; k < 3; ++k)
        {
            // Evaluate off the sphere without renormalisation by scaling back afterwards is not
            // possible, so probe along a tangent direction only.
            Eigen::Vector3d dir = Eigen::Vector3d::Unit(k);
            dir -= dir.dot(n) * n;
            if (dir.norm() < 1e-3)
                continue;
            dir.normalize();
            const ShVector fd = (sh_basis((n + h * dir).normalized()) - sh_basis((n - h * dir).normalized())) / (2 * h);
            CHECK((fd - J * dir).norm() < 1e-6);
        }
    }
}
