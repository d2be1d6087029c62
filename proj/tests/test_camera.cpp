#include "facefit/camera.hpp"
#include "facefit/errors.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>

using namespace facefit;

namespace {

Eigen::VectorXd point(double x, double y, double z)
{
    return Eigen::Vector3d(x, y, z);
}

} // namespace

TEST_CASE("rotation conventions")
{
    CHECK(rotation_from_euler(0, 0, 0) == Eigen::Matrix3d::Identity());

    const Eigen::Vector3d r = rotation_from_euler(0, std::numbers::pi / 2, 0) * Eigen::Vector3d(1, 0, 0);
    CHECK((r - Eigen::Vector3d(0, 0, -1)).norm() < 1e-15);

    Rng rng(1);
    for (int i = 0; i < 100; ++i)
    {
        const Eigen::Matrix3d R = rotation_from_euler(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("rotation derivatives match finite differences")
{
    Rng rng(2);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i)
    {
        const double a[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto dR = rotation_derivatives(a[0], a[1], a[2]);
        for (int k = 0; k < 3; ++k)
        {
            double p[3] = {a[0], a[1], a[2]}, m[3] = {a[0], a[1], a[2]};
            p[k] += h;
            m[k] -= h;
            const Eigen::Matrix3d fd =
                (rotation_from_euler(p[0], p[1], p[2]) - rotation_from_euler(m[0], m[1], m[2])) / (2 * h);
            CHECK((fd - dR[k]).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("identity projection returns x and y")
{
    Rng rng(3);
    Eigen::VectorXd pts(30);
    for (int i = 0; i < 30; ++i)
        pts[i] = rng.uniform(-5, 5);
    const Projection p = project_vertices(pts, Pose{});
    for (int v = 0; v < 10; ++v)
    {
        CHECK(p.pixels(0, v) == pts[3 * v]);
        CHECK(p.pixels(1, v) == pts[3 * v + 1]);
        CHECK(p.depths[v] == pts[3 * v + 2]);
    }
    Pose doubled;
    doubled.f = 2.0;
    const Projection q = project_vertices(pts, doubled);
    CHECK((q.pixels - 2.0 * p.pixels).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand-evaluated projection of one point")
{
    Pose pose;
    pose.yaw = std::numbers::pi / 2;
    pose.t2d = Eigen::Vector3d(0.5, -0.5, 0.0);
    // R_y(pi/2) (1, 2, 3) = (3, 2, -1).
    const Projection p = project_vertices(point(1, 2, 3), pose);
    CHECK(p.pixels(0, 0) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(p.pixels(1, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(p.depths[0] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("projection is affine in the point")
{
    Rng rng(4);
    const Pose pose{0.3, -0.2, 0.1, 3.0, Eigen::Vector3d(1.0, 2.0, 5.0)};
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Vector3d p1(rng.normal(), rng.normal(), rng.normal()), p2(rng.normal(), rng.normal(), rng.normal());
        const double a = rng.uniform(-2, 2), b = 1.0 - a;
        const Eigen::Vector2d lhs = project_vertices(a * p1 + b * p2, pose).pixels.col(0);
        const Eigen::Vector2d rhs =
            a * project_vertices(p1, pose).pixels.col(0) + b * project_vertices(p2, pose).pixels.col(0);
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("pose Jacobian matches central differences")
{
    Rng rng(5);
    const double h = 1e-5;
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Vector3d P(rng.normal(), rng.normal(), rng.normal());
        const Pose pose{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 3),
                        Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal())};
        const auto J = projection_pose_jacobian(P, pose);
        Eigen::Matrix<double, 2, 7> fd;
        for (int k = 0; k < 7; ++k)
        {
            Pose p = pose, m = pose;
            double* fp[7] = {&p.pitch, &p.yaw, &p.roll, &p.f, &p.t2d.x(), &p.t2d.y(), &p.t2d.z()};
            double* fm[7] = {&m.pitch, &m.yaw, &m.roll, &m.f, &m.t2d.x(), &m.t2d.y(), &m.t2d.z()};
            *fp[k] += h;
            *fm[k] -= h;
            fd.col(k) = (project_vertices(P, p).pixels.col(0) - project_vertices(P, m).pixels.col(0)) / (2 * h);
        }
        const Eigen::Map<const Eigen::VectorXd> a(J.data(), 14), b(fd.data(), 14);
        CHECK(test::relative_error(a, b) < 1e-4);
    }
}

TEST_CASE("back projection inverts projection")
{
    Rng rng(6);
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Vector3d P(rng.normal(), rng.normal(), rng.normal());
        const Pose pose{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 3),
                        Eigen::Vector3d(rng.normal(), rng.normal(), 10.0)};
        const Projection p = project_vertices(P, pose);
        const Eigen::Vector3d back = back_project(p.pixels.col(0), p.depths[0], pose);
        CHECK((back - P).norm() < 1e-10);
    }
}

TEST_CASE("projection errors")
{
    Pose pose;
    pose.f = 0.0;
    CHECK_THROWS_AS(project_vertices(point(1, 2, 3), pose), Error);
    try
    {
        Eigen::VectorXd pts = Eigen::VectorXd::Zero(9);
        pts[4] = std::numeric_limits<double>::infinity();
        project_vertices(pts, Pose{});
        FAIL("expected numeric_range");
    }
    catch (const Error& e)
    {
        CHECK(e.code() == ErrorCode::numeric_range);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}
