#include "facefit/morphable_model.hpp"

#include "facefit/errors.hpp"

#include <cmath>
#include <set>
#include <string>

namespace facefit {

namespace {

void require_rows(const Eigen::MatrixXd& m, Eigen::Index rows, const char* what)
{
    if (m.rows() != rows)
        throw_shape_error(what, static_cast<std::size_t>(rows), static_cast<std::size_t>(m.rows()));
}

void require_size(const Eigen::VectorXd& v, Eigen::Index n, const char* what)
{
    if (v.size() != n)
        throw_shape_error(what, static_cast<std::size_t>(n), static_cast<std::size_t>(v.size()));
}

void require_positive(const Eigen::VectorXd& sigma, const char* what)
{
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
    {
        if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
            throw Error(ErrorCode::domain, std::string(what) + "[" + std::to_string(i) + "] must be > 0");
    }
}

} // namespace

MorphableModel::MorphableModel(Eigen::VectorXd mean_shape, Eigen::MatrixXd id_basis, Eigen::MatrixXd exp_basis,
                               Eigen::VectorXd mean_albedo, Eigen::MatrixXd tex_basis,
                               std::vector<Triangle> triangles, std::vector<int> landmark_indices,
                               Eigen::VectorXd id_sigma, Eigen::VectorXd exp_sigma, Eigen::VectorXd tex_sigma)
    : mean_shape_(std::move(mean_shape)), id_basis_(std::move(id_basis)), exp_basis_(std::move(exp_basis)),
      mean_albedo_(std::move(mean_albedo)), tex_basis_(std::move(tex_basis)), triangles_(std::move(triangles)),
      landmark_indices_(std::move(landmark_indices)), id_sigma_(std::move(id_sigma)),
      exp_sigma_(std::move(exp_sigma)), tex_sigma_(std::move(tex_sigma))
{
    if (mean_shape_.size() % 3 != 0)
        throw Error(ErrorCode::shape, "mean_shape length must be a multiple of 3");
    const Eigen::Index n = mean_shape_.size();
    const int v = vertex_count();
    require_rows(id_basis_, n, "id_basis rows");
    require_rows(exp_basis_, n, "exp_basis rows");
    require_size(mean_albedo_, n, "mean_albedo");
    require_rows(tex_basis_, n, "tex_basis rows");
    require_size(id_sigma_, id_basis_.cols(), "id_sigma");
    require_size(exp_sigma_, exp_basis_.cols(), "exp_sigma");
    require_size(tex_sigma_, tex_basis_.cols(), "tex_sigma");
    require_positive(id_sigma_, "id_sigma");
    require_positive(exp_sigma_, "exp_sigma");
    require_positive(tex_sigma_, "tex_sigma");
    for (std::size_t t = 0; t < triangles_.size(); ++t)
    {
        for (int idx : triangles_[t])
        {
            if (idx < 0 || idx >= v)
                throw Error(ErrorCode::domain,
                            "triangle " + std::to_string(t) + " references vertex " + std::to_string(idx));
        }
    }
    if (landmark_indices_.size() != 68)
        throw_shape_error("landmark_indices", 68, landmark_indices_.size());
    std::set<int> seen;
    for (int idx : landmark_indices_)
    {
        if (idx < 0 || idx >= v)
            throw Error(ErrorCode::domain, "landmark vertex " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second)
            throw Error(ErrorCode::domain, "duplicate landmark vertex " + std::to_string(idx));
    }
}

FaceParams FaceParams::zeros(const MorphableModel& model, LightingProfile lighting)
{
    FaceParams p;
    p.alpha_id = Eigen::VectorXd::Zero(model.n_id());
    p.beta_exp = Eigen::VectorXd::Zero(model.n_exp());
    p.beta_tex = Eigen::VectorXd::Zero(model.n_tex());
    p.lighting = lighting;
    return p;
}

int FaceParams::degrees_of_freedom() const noexcept
{
    return static_cast<int>(alpha_id.size() + beta_exp.size() + beta_tex.size()) + 9 * lighting_channels() + 6;
}

bool FaceParams::all_finite() const
{
    return alpha_id.allFinite() && beta_exp.allFinite() && beta_tex.allFinite() && gamma.allFinite() &&
           std::isfinite(pose.pitch) && std::isfinite(pose.yaw) && std::isfinite(pose.roll) &&
           std::isfinite(pose.f) && pose.t2d.allFinite();
}

bool FaceParams::operator==(const FaceParams& other) const
{
    return alpha_id.size() == other.alpha_id.size() && beta_exp.size() == other.beta_exp.size() &&
           beta_tex.size() == other.beta_tex.size() && alpha_id == other.alpha_id && beta_exp == other.beta_exp &&
           beta_tex == other.beta_tex && gamma == other.gamma && pose == other.pose && lighting == other.lighting;
}

ParameterLayout ParameterLayout::of(const FaceParams& params)
{
    return {static_cast<int>(params.alpha_id.size()), static_cast<int>(params.beta_exp.size()),
            static_cast<int>(params.beta_tex.size()), params.lighting};
}

Eigen::VectorXd ParameterLayout::pack(const FaceParams& params) const
{
    if (params.alpha_id.size() != n_id)
        throw_shape_error("alpha_id", n_id, params.alpha_id.size());
    if (params.beta_exp.size() != n_exp)
        throw_shape_error("beta_exp", n_exp, params.beta_exp.size());
    if (params.beta_tex.size() != n_tex)
        throw_shape_error("beta_tex", n_tex, params.beta_tex.size());
    Eigen::VectorXd flat(size());
    flat.segment(id_offset(), n_id) = params.alpha_id;
    flat.segment(exp_offset(), n_exp) = params.beta_exp;
    flat.segment(tex_offset(), n_tex) = params.beta_tex;
    if (lighting == LightingProfile::shared)
        flat.segment<9>(gamma_offset()) = params.gamma.col(0);
    else
        for (int c = 0; c < 3; ++c)
            flat.segment<9>(gamma_offset() + 9 * c) = params.gamma.col(c);
    const int p = pose_offset();
    flat[p + 0] = params.pose.pitch;
    flat[p + 1] = params.pose.yaw;
    flat[p + 2] = params.pose.roll;
    flat[p + 3] = params.pose.f;
    flat[p + 4] = params.pose.t2d.x();
    flat[p + 5] = params.pose.t2d.y();
    return flat;
}

Eigen::VectorXd ParameterLayout::pack_gradient(const FaceParams& gradient) const
{
    Eigen::VectorXd flat = pack(gradient);
    if (lighting == LightingProfile::shared)
        flat.segment<9>(gamma_offset()) = gradient.gamma.rowwise().sum();
    return flat;
}

FaceParams ParameterLayout::unpack(const Eigen::VectorXd& flat, const FaceParams& base) const
{
    if (flat.size() != size())
        throw_shape_error("flat parameter vector", size(), flat.size());
    FaceParams p = base;
    p.lighting = lighting;
    p.alpha_id = flat.segment(id_offset(), n_id);
    p.beta_exp = flat.segment(exp_offset(), n_exp);
    p.beta_tex = flat.segment(tex_offset(), n_tex);
    if (lighting == LightingProfile::shared)
        for (int c = 0; c < 3; ++c)
            p.gamma.col(c) = flat.segment<9>(gamma_offset());
    else
        for (int c = 0; c < 3; ++c)
            p.gamma.col(c) = flat.segment<9>(gamma_offset() + 9 * c);
    const int o = pose_offset();
    p.pose.pitch = flat[o + 0];
    p.pose.yaw = flat[o + 1];
    p.pose.roll = flat[o + 2];
    p.pose.f = flat[o + 3];
    p.pose.t2d.x() = flat[o + 4];
    p.pose.t2d.y() = flat[o + 5];
    return p;
}

Eigen::VectorXd assemble_shape(const MorphableModel& model, const FaceParams& params)
{
    if (params.alpha_id.size() != model.n_id())
        throw_shape_error("alpha_id", model.n_id(), params.alpha_id.size());
    if (params.beta_exp.size() != model.n_exp())
        throw_shape_error("beta_exp", model.n_exp(), params.beta_exp.size());
    Eigen::VectorXd shape = model.mean_shape();
    if (model.n_id() > 0)
        shape.noalias() += model.id_basis() * params.alpha_id;
    if (model.n_exp() > 0)
        shape.noalias() += model.exp_basis() * params.beta_exp;
    return shape;
}

Eigen::VectorXd assemble_albedo_unclamped(const MorphableModel& model, const FaceParams& params)
{
    if (params.beta_tex.size() != model.n_tex())
        throw_shape_error("beta_tex", model.n_tex(), params.beta_tex.size());
    Eigen::VectorXd albedo = model.mean_albedo();
    if (model.n_tex() > 0)
        albedo.noalias() += model.tex_basis() * params.beta_tex;
    return albedo;
}

Eigen::VectorXd assemble_albedo(const MorphableModel& model, const FaceParams& params)
{
    return assemble_albedo_unclamped(model, params).cwiseMax(0.0).cwiseMin(1.0);
}

double regularization_loss(const FaceParams& params, const MorphableModel& model)
{
    if (params.alpha_id.size() != model.n_id())
        throw_shape_error("alpha_id", model.n_id(), params.alpha_id.size());
    if (params.beta_exp.size() != model.n_exp())
        throw_shape_error("beta_exp", model.n_exp(), params.beta_exp.size());
    if (params.beta_tex.size() != model.n_tex())
        throw_shape_error("beta_tex", model.n_tex(), params.beta_tex.size());
    return params.alpha_id.cwiseQuotient(model.id_sigma()).squaredNorm() +
           params.beta_exp.cwiseQuotient(model.exp_sigma()).squaredNorm() +
           params.beta_tex.cwiseQuotient(model.tex_sigma()).squaredNorm();
}

void accumulate_regularization_gradient(const FaceParams& params, const MorphableModel& model, double weight,
                                        FaceParams& gradient)
{
    gradient.alpha_id += 2.0 * weight * params.alpha_id.cwiseQuotient(model.id_sigma().cwiseAbs2());
    gradient.beta_exp += 2.0 * weight * params.beta_exp.cwiseQuotient(model.exp_sigma().cwiseAbs2());
    gradient.beta_tex += 2.0 * weight * params.beta_tex.cwiseQuotient(model.tex_sigma().cwiseAbs2());
}

} // namespace facefit
