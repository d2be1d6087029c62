#include "facefit/fitter.hpp"

#include "facefit/errors.hpp"
#include "facefit/illumination.hpp"
#include "facefit/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace facefit {

void AdamHyper::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw Error(ErrorCode::domain, "learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw Error(ErrorCode::domain, "Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::domain, "Adam epsilon must be positive");
}

AdamState AdamState::fresh(Eigen::Index size, const AdamHyper& hyper)
{
    hyper.validate();
    AdamState s;
    s.hyper = hyper;
    s.m = Eigen::VectorXd::Zero(size);
    s.v = Eigen::VectorXd::Zero(size);
    return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad)
{
    if (params.size() != grad.size())
        throw_shape_error("adam gradient", static_cast<std::size_t>(params.size()), static_cast<std::size_t>(grad.size()));
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw_shape_error("adam moments", static_cast<std::size_t>(params.size()), static_cast<std::size_t>(state.m.size()));
    for (Eigen::Index i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw NonFiniteGradientError("gradient entry " + std::to_string(i) + " is not finite",
                                         static_cast<std::size_t>(i));

    const AdamHyper& a = state.hyper;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(a.beta1, t);
    const double c2 = 1.0 - std::pow(a.beta2, t);
    for (Eigen::Index i = 0; i < params.size(); ++i)
    {
        state.m[i] = a.beta1 * state.m[i] + (1.0 - a.beta1) * grad[i];
        state.v[i] = a.beta2 * state.v[i] + (1.0 - a.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= a.learning_rate * m_hat / (std::sqrt(v_hat) + a.epsilon);
    }
}

std::string to_string(Termination t)
{
    switch (t)
    {
    case Termination::max_iterations: return "max_iterations";
    case Termination::converged: return "converged";
    case Termination::stationary: return "stationary";
    }
    return "unknown";
}

void FitConfig::validate() const
{
    if (max_iterations < 1)
        throw Error(ErrorCode::domain, "max_iterations must be >= 1");
    if (!(tolerance >= 0.0) || !(gradient_tolerance >= 0.0))
        throw Error(ErrorCode::domain, "tolerances must be non-negative");
    if (window < 1)
        throw Error(ErrorCode::domain, "convergence window must be >= 1");
    if (!(coarse_lr_decay > 0.0 && coarse_lr_decay <= 1.0) || !(detail_lr_decay > 0.0 && detail_lr_decay <= 1.0))
        throw Error(ErrorCode::domain, "learning-rate decay must lie in (0, 1]");
    if (!(delta_max >= 0.0) || !std::isfinite(delta_max))
        throw Error(ErrorCode::domain, "delta_max must be >= 0 (0 selects the default)");
    coarse_adam.validate();
    detail_adam.validate();
}

namespace {

bool converged(const std::vector<double>& totals, int window, double tol)
{
    const std::size_t n = totals.size();
    if (n <= static_cast<std::size_t>(window))
        return false;
    const double now = totals[n - 1], before = totals[n - 1 - static_cast<std::size_t>(window)];
    return std::abs(now - before) <= tol * std::abs(before);
}

double model_extent(const MorphableModel& model)
{
    return as_columns(model.mean_shape()).cwiseAbs().maxCoeff();
}

/// Per-entry scale of the optimizer's normalised variables.
Eigen::VectorXd variable_scales(const ParameterLayout& layout, const MorphableModel& model, double f0)
{
    Eigen::VectorXd s = Eigen::VectorXd::Ones(layout.size());
    s.segment(layout.id_offset(), layout.n_id) = model.id_sigma();
    s.segment(layout.exp_offset(), layout.n_exp) = model.exp_sigma();
    s.segment(layout.tex_offset(), layout.n_tex) = model.tex_sigma();
    const int p = layout.pose_offset();
    s[p + 3] = f0;
    s[p + 4] = f0;
    s[p + 5] = f0;
    return s;
}

bool any_confident(const LandmarkSet* landmarks)
{
    if (!landmarks)
        return false;
    for (double c : landmarks->confidence)
        if (c > 0.0)
            return true;
    return false;
}

} // namespace

FaceParams initial_params(const MorphableModel& model, int width, int height, const LandmarkSet* landmarks,
                          LightingProfile lighting, const ProjectionMatrix& pr)
{
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::domain, "image must be non-empty");
    FaceParams p = FaceParams::zeros(model, lighting);
    p.gamma.row(0).setConstant(uniform_light_coefficient());

    const Eigen::Matrix3Xd mean = as_columns(model.mean_shape());
    const Eigen::Matrix2Xd planar = pr.rows * mean;
    const double extent = model_extent(model);
    p.pose.t2d.z() = 10.0 * extent;

    bool fitted = false;
    if (any_confident(landmarks))
    {
        const auto& idx = model.landmark_indices();
        double wsum = 0.0;
        Eigen::Vector2d mbar = Eigen::Vector2d::Zero(), tbar = Eigen::Vector2d::Zero();
        for (std::size_t k = 0; k < idx.size(); ++k)
        {
            const double c = landmarks->confidence[k];
            wsum += c;
            mbar += c * planar.col(idx[k]);
            tbar += c * landmarks->points[k];
        }
        mbar /= wsum;
        tbar /= wsum;
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k)
        {
            const double c = landmarks->confidence[k];
            const Eigen::Vector2d dm = planar.col(idx[k]) - mbar;
            num += c * dm.dot(landmarks->points[k] - tbar);
            den += c * dm.squaredNorm();
        }
        if (den > 0.0 && num > 0.0)
        {
            p.pose.f = num / den;
            p.pose.t2d.head<2>() = tbar - p.pose.f * mbar;
            fitted = true;
        }
    }
    if (!fitted)
    {
        const Eigen::Vector2d lo = planar.rowwise().minCoeff(), hi = planar.rowwise().maxCoeff();
        const double span = std::max((hi - lo).maxCoeff(), 1e-12);
        p.pose.f = 0.8 * std::min(width, height) / span;
        p.pose.t2d.head<2>() = Eigen::Vector2d(0.5 * width, 0.5 * height) - p.pose.f * 0.5 * (lo + hi);
    }
    return p;
}

FitReport fit_coarse(const ImageRGB& image, const LandmarkSet* landmarks, const Mask& visibility,
                     const MorphableModel& model, const LossWeights& weights, const FitConfig& config,
                     const EmbeddingProvider* embedder)
{
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    weights.validate();
    require_same_shape(visibility, image, "visibility mask");
    if (weights.lambda_land > 0.0 && !landmarks)
        throw Error(ErrorCode::usage, "landmarks required when lambda_land > 0");
    if (landmarks)
        landmarks->validate();

    const bool image_terms = (weights.lambda_phot > 0.0 || weights.lambda_feat > 0.0) && count_set(visibility) > 0;
    const bool landmark_term = weights.lambda_land > 0.0 && any_confident(landmarks);
    if (!image_terms && !landmark_term)
        throw Error(ErrorCode::unconstrained_fit,
                    "no visible pixels and no landmark term: the fit is unconstrained");

    ObjectiveInputs inputs;
    inputs.model = &model;
    inputs.target = &image;
    inputs.visibility = &visibility;
    inputs.landmarks = landmarks;
    inputs.embedder = embedder;
    inputs.weights = weights;
    inputs.pr = config.projection;

    const FaceParams init = initial_params(model, image.width(), image.height(), landmarks, config.lighting,
                                           config.projection);
    const ParameterLayout layout = ParameterLayout::of(init);
    const Eigen::VectorXd x0 = layout.pack(init);
    const Eigen::VectorXd scale = variable_scales(layout, model, init.pose.f);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size());
    AdamState adam = AdamState::fresh(layout.size(), config.coarse_adam);

    FitReport report;
    std::vector<double> totals;
    FaceParams current = init;
    for (int it = 0; it < config.max_iterations; ++it)
    {
        current = layout.unpack(x0 + scale.cwiseProduct(z), init);
        const ObjectiveValue value = evaluate_objective(inputs, current, true);
        report.coarse_history.push_back({value.components, value.total});
        totals.push_back(value.total);
        report.coarse_iterations = it + 1;

        const Eigen::VectorXd gz = scale.cwiseProduct(layout.pack_gradient(value.gradient));
        if (debug_enabled() && it % 100 == 0)
            log_debug("coarse it " + std::to_string(it) + " loss " + std::to_string(value.total));
        if (converged(totals, config.window, config.tolerance))
        {
            report.coarse_termination = Termination::converged;
            break;
        }
        if (gz.norm() <= config.gradient_tolerance)
        {
            report.coarse_termination = Termination::stationary;
            break;
        }
        if (it + 1 == config.max_iterations)
            break;
        adam_step(adam, z, gz);
        adam.hyper.learning_rate *= config.coarse_lr_decay;
    }
    report.params = current;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

DetailResult fit_detail(const DepthMap& base, const DepthMap& target_signal, const Mask& coverage,
                        const FitConfig& config)
{
    config.validate();
    require_same_shape(target_signal, base, "detail target");
    require_same_shape(coverage, base, "detail coverage");
    DetailResult result;
    // Pixels without a finite target (e.g. outside the signal's own silhouette) keep code 128.
    Mask usable(coverage.width(), coverage.height(), 0);
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < coverage.size(); ++i)
    {
        if (!coverage[i])
            continue;
        if (!std::isfinite(base[i]) || !std::isfinite(target_signal[i]))
        {
            ++result.missing_target_pixels;
            continue;
        }
        usable[i] = 1;
        covered.push_back(i);
    }
    if (covered.empty())
        throw Error(ErrorCode::empty_surface, "fit_detail: no covered pixel has a finite base and target depth");
    if (result.missing_target_pixels > 0)
        log_warn("detail stage: " + std::to_string(result.missing_target_pixels) +
                 " covered pixels have no finite target depth and keep zero displacement");

    const double delta = config.delta_max > 0.0 ? config.delta_max : default_delta_max(base, usable);
    const BumpMap truth = bump_from_depths(target_signal, base, usable, delta);

    for (std::size_t i : covered)
    {
        const long double raw = 127.0L * static_cast<long double>(target_signal[i] - base[i]) / delta;
        if (raw > 127.0L || raw < -128.0L)
            ++result.saturated_pixels;
    }

    // Optimised variable u = offset / 127 on covered pixels.
    constexpr double lo = -128.0 / 127.0, hi = 1.0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(covered.size()));
    AdamState adam = AdamState::fresh(u.size(), config.detail_adam);
    BumpMap est = BumpMap::neutral(base.width(), base.height(), delta);
    std::vector<double>& history = result.history;
    for (int it = 0; it < config.max_iterations; ++it)
    {
        for (std::size_t k = 0; k < covered.size(); ++k)
            est.offsets[covered[k]] = 127.0L * static_cast<long double>(u[static_cast<Eigen::Index>(k)]);
        history.push_back(geo_loss(est, truth));
        result.iterations = it + 1;
        if (converged(history, config.window, config.tolerance))
        {
            result.termination = Termination::converged;
            break;
        }
        const Grid<double> g = geo_loss_gradient(est, truth);
        Eigen::VectorXd gu(u.size());
        for (std::size_t k = 0; k < covered.size(); ++k)
            gu[static_cast<Eigen::Index>(k)] = 127.0 * g[covered[k]];
        if (gu.norm() <= config.gradient_tolerance)
        {
            result.termination = Termination::stationary;
            break;
        }
        if (it + 1 == config.max_iterations)
            break;
        adam_step(adam, u, gu);
        adam.hyper.learning_rate *= config.detail_lr_decay;
        u = u.cwiseMax(lo).cwiseMin(hi);
    }
    result.bump = std::move(est);
    return result;
}

GradientCheckPoint check_gradient(const ObjectiveInputs& inputs, const FaceParams& params, double h)
{
    const ParameterLayout layout = ParameterLayout::of(params);
    const ObjectiveValue base = evaluate_objective(inputs, params, true);
    const Eigen::VectorXd analytic = layout.pack_gradient(base.gradient);
    const Eigen::VectorXd x = layout.pack(params);
    Eigen::VectorXd numeric(x.size());
    GradientCheckPoint out;
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const ObjectiveValue vp = evaluate_objective(inputs, layout.unpack(xp, params), false);
        const ObjectiveValue vm = evaluate_objective(inputs, layout.unpack(xm, params), false);
        if (vp.tri_index != base.tri_index || vm.tri_index != base.tri_index)
        {
            out.coverage_changed = true;
            ++out.changed_probes;
        }
        numeric[i] = (vp.total - vm.total) / (2.0 * h);
    }
    const double denom = std::max({analytic.norm(), numeric.norm(), 1e-300});
    out.relative_error = (analytic - numeric).norm() / denom;
    return out;
}

} // namespace facefit
