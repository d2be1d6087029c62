#include "facefit/errors.hpp"
#include "facefit/morphable_model.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace facefit;

namespace {

FaceParams random_params(const MorphableModel& m, Rng& rng)
{
    FaceParams p = FaceParams::zeros(m);
    for (int i = 0; i < m.n_id(); ++i)
        p.alpha_id[i] = rng.normal();
    for (int i = 0; i < m.n_exp(); ++i)
        p.beta_exp[i] = rng.normal();
    for (int i = 0; i < m.n_tex(); ++i)
        p.beta_tex[i] = rng.normal();
    return p;
}

} // namespace

TEST_CASE("zero coefficients give the mean shape and albedo exactly")
{
    const MorphableModel m = test::tiny_model();
    const FaceParams p = FaceParams::zeros(m);
    CHECK(assemble_shape(m, p) == m.mean_shape());
    CHECK(assemble_albedo(m, p) == m.mean_albedo());
}

TEST_CASE("unit identity coefficient selects the first basis column")
{
    const MorphableModel m = test::tiny_model();
    FaceParams p = FaceParams::zeros(m);
    p.alpha_id[0] = 1.0;
    CHECK((assemble_shape(m, p) - (m.mean_shape() + m.id_basis().col(0))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shape and albedo match a dense scalar-loop oracle")
{
    const MorphableModel m = test::tiny_model();
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial)
    {
        const FaceParams p = random_params(m, rng);
        const Eigen::VectorXd shape = assemble_shape(m, p);
        const Eigen::VectorXd albedo = assemble_albedo_unclamped(m, p);
        for (Eigen::Index i = 0; i < shape.size(); ++i)
        {
            double s = m.mean_shape()[i], a = m.mean_albedo()[i];
            for (int k = 0; k < m.n_id(); ++k)
                s += m.id_basis()(i, k) * p.alpha_id[k];
            for (int k = 0; k < m.n_exp(); ++k)
                s += m.exp_basis()(i, k) * p.beta_exp[k];
            for (int k = 0; k < m.n_tex(); ++k)
                a += m.tex_basis()(i, k) * p.beta_tex[k];
            CHECK(shape[i] == doctest::Approx(s).epsilon(1e-12));
            CHECK(albedo[i] == doctest::Approx(a).epsilon(1e-12));
        }
    }
}

TEST_CASE("albedo is clamped to the unit interval")
{
    const MorphableModel m = test::tiny_model();
    FaceParams p = FaceParams::zeros(m);
    p.beta_tex[0] = 100.0;
    const Eigen::VectorXd raw = assemble_albedo_unclamped(m, p);
    const Eigen::VectorXd clamped = assemble_albedo(m, p);
    for (Eigen::Index i = 0; i < raw.size(); ++i)
    {
        CHECK(clamped[i] >= 0.0);
        CHECK(clamped[i] <= 1.0);
        if (raw[i] > 1.0)
            CHECK(clamped[i] == 1.0);
    }
}

TEST_CASE("assemble_shape is linear in the coefficients")
{
    const MorphableModel m = make_toy_model();
    Rng rng(5);
    const FaceParams p1 = random_params(m, rng), p2 = random_params(m, rng);
    const double a = 0.7, b = -1.3;
    FaceParams mix = FaceParams::zeros(m);
    mix.alpha_id = a * p1.alpha_id + b * p2.alpha_id;
    mix.beta_exp = a * p1.beta_exp + b * p2.beta_exp;
    const Eigen::VectorXd lhs = assemble_shape(m, mix) - m.mean_shape();
    const Eigen::VectorXd rhs =
        a * (assemble_shape(m, p1) - m.mean_shape()) + b * (assemble_shape(m, p2) - m.mean_shape());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("regularization loss")
{
    const MorphableModel m = make_toy_model();
    FaceParams p = FaceParams::zeros(m);
    CHECK(regularization_loss(p, m) == 0.0);

    p.alpha_id = m.id_sigma();
    CHECK(regularization_loss(p, m) == doctest::Approx(m.n_id()).epsilon(1e-14));

    Rng rng(9);
    p = random_params(m, rng);
    double oracle = 0.0;
    for (int i = 0; i < m.n_id(); ++i)
        oracle += (p.alpha_id[i] / m.id_sigma()[i]) * (p.alpha_id[i] / m.id_sigma()[i]);
    for (int i = 0; i < m.n_exp(); ++i)
        oracle += (p.beta_exp[i] / m.exp_sigma()[i]) * (p.beta_exp[i] / m.exp_sigma()[i]);
    for (int i = 0; i < m.n_tex(); ++i)
        oracle += (p.beta_tex[i] / m.tex_sigma()[i]) * (p.beta_tex[i] / m.tex_sigma()[i]);
    CHECK(regularization_loss(p, m) == doctest::Approx(oracle).epsilon(1e-12));

    SUBCASE("sign flip of any coefficient leaves it unchanged")
    {
        const double before = regularization_loss(p, m);
        for (int i = 0; i < m.n_id(); i += 7)
        {
            FaceParams q = p;
            q.alpha_id[i] = -q.alpha_id[i];
            CHECK(regularization_loss(q, m) == before);
        }
        FaceParams q = p;
        q.beta_tex[3] = -q.beta_tex[3];
        q.beta_exp[5] = -q.beta_exp[5];
        CHECK(regularization_loss(q, m) == before);
    }

    SUBCASE("gradient matches finite differences")
    {
        const MorphableModel t = test::tiny_model();
        Rng r2(4);
        const FaceParams q = random_params(t, r2);
        FaceParams g = FaceParams::zeros(t);
        g.pose = Pose{0.0, 0.0, 0.0, 0.0, Eigen::Vector3d::Zero()};
        accumulate_regularization_gradient(q, t, 1.0, g);
        const ParameterLayout layout = ParameterLayout::of(q);
        const auto f = [&](const Eigen::VectorXd& x) { return regularization_loss(layout.unpack(x, q), t); };
        const Eigen::VectorXd numeric = test::numeric_gradient(f, layout.pack(q));
        CHECK(test::relative_error(layout.pack_gradient(g), numeric) < 1e-7);
    }
}

TEST_CASE("default profile has 239 degrees of freedom")
{
    const MorphableModel m = make_toy_model();
    CHECK(m.n_id() == 80);
    CHECK(m.n_exp() == 64);
    CHECK(m.n_tex() == 80);
    const FaceParams shared = FaceParams::zeros(m);
    CHECK(shared.degrees_of_freedom() == 80 + 64 + 80 + 9 + 6);
    CHECK(shared.degrees_of_freedom() == 239);
    CHECK(ParameterLayout::of(shared).size() == 239);
    const FaceParams per_channel = FaceParams::zeros(m, LightingProfile::per_channel);
    CHECK(per_channel.degrees_of_freedom() == 257);
}

TEST_CASE("parameter layout round trip")
{
    const MorphableModel m = make_toy_model();
    Rng rng(2);
    for (LightingProfile lp : {LightingProfile::shared, LightingProfile::per_channel})
    {
        FaceParams p = FaceParams::zeros(m, lp);
        p.alpha_id.setRandom();
        p.beta_exp.setRandom();
        p.beta_tex.setRandom();
        if (lp == LightingProfile::shared)
            p.gamma = Eigen::Matrix<double, 9, 1>::Random().replicate<1, 3>();
        else
            p.gamma = ShMatrix::Random();
        p.pose = Pose{0.1, -0.2, 0.3, 42.0, Eigen::Vector3d(3.0, 4.0, 5.0)};
        const ParameterLayout layout = ParameterLayout::of(p);
        CHECK(layout.unpack(layout.pack(p), p) == p);
    }
}

TEST_CASE("toy model structure")
{
    const MorphableModel m = make_toy_model();
    CHECK(m.vertex_count() == 162);
    CHECK(m.triangles().size() == 320);
    CHECK(m.landmark_indices().size() == 68);
    CHECK(m.mean_albedo().minCoeff() >= 0.0);
    CHECK(m.mean_albedo().maxCoeff() <= 1.0);
    CHECK(make_toy_model().mean_shape() == m.mean_shape());
    for (int k = 0; k < m.n_id(); ++k)
        CHECK(m.id_sigma()[k] > 0.0);
}

TEST_CASE("model constructor rejects inconsistent inputs")
{
    const MorphableModel m = test::tiny_model();
    CHECK_THROWS_AS(MorphableModel(m.mean_shape(), Eigen::MatrixXd::Zero(9, 2), m.exp_basis(), m.mean_albedo(),
                                   m.tex_basis(), m.triangles(), m.landmark_indices(), m.id_sigma(), m.exp_sigma(),
                                   m.tex_sigma()),
                    Error);
    std::vector<Triangle> bad = m.triangles();
    bad[0][0] = 1000;
    CHECK_THROWS_AS(MorphableModel(m.mean_shape(), m.id_basis(), m.exp_basis(), m.mean_albedo(), m.tex_basis(), bad,
                                   m.landmark_indices(), m.id_sigma(), m.exp_sigma(), m.tex_sigma()),
                    Error);
    CHECK_THROWS_AS(MorphableModel(m.mean_shape(), m.id_basis(), m.exp_basis(), m.mean_albedo(), m.tex_basis(),
                                   m.triangles(), m.landmark_indices(), -m.id_sigma(), m.exp_sigma(), m.tex_sigma()),
                    Error);
}

TEST_CASE("coefficient size mismatch is a shape error")
{
    const MorphableModel m = test::tiny_model();
    FaceParams p = FaceParams::zeros(m);
    p.alpha_id = Eigen::VectorXd::Zero(5);
    try
    {
        assemble_shape(m, p);
        FAIL("expected a shape error");
    }
    catch (const Error& e)
    {
        CHECK(e.code() == ErrorCode::shape);
    }
}
