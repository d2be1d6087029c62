#pragma once

#include "facefit/bump_detail.hpp"
#include "facefit/losses.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/objective.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace facefit {

struct AdamHyper
{
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState
{
    AdamHyper hyper;
    long long step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;

    static AdamState fresh(Eigen::Index size, const AdamHyper& hyper = {});
};

/**
 * One bias-corrected Adam update in place. Throws
 * NonFiniteGradientError naming the first non-finite entry before touching
 * any state, and Error(shape) on a size mismatch.
 */
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad);

enum class Termination { max_iterations, converged, stationary };

std::string to_string(Termination t);

struct FitConfig
{
    int max_iterations = 2000;
    double tolerance = 1e-6;       // relative loss change over `window` iterations
    int window = 20;
    double gradient_tolerance = 1e-8;  // stop when the scaled gradient norm is below this
    AdamHyper coarse_adam{0.01};
    AdamHyper detail_adam{0.05};
    /// Multiplies the learning rate every iteration (1 = constant).
    double coarse_lr_decay = 1.0;
    double detail_lr_decay = 0.998;
    double delta_max = 0.0; // 0 selects default_delta_max
    LightingProfile lighting = LightingProfile::shared;
    std::uint64_t seed = 0;
    ProjectionMatrix projection = ProjectionMatrix::orthographic();

    void validate() const;
};

struct CoarseRecord
{
    LossComponents components;
    double total = 0.0;
};

struct FitReport
{
    std::vector<CoarseRecord> coarse_history;
    std::vector<double> detail_history; // L_geo per detail iteration
    FaceParams params;
    BumpMap bump;
    bool has_bump = false;
    std::size_t saturated_pixels = 0;
    std::size_t missing_target_pixels = 0;
    Termination coarse_termination = Termination::max_iterations;
    Termination detail_termination = Termination::max_iterations;
    int coarse_iterations = 0;
    int detail_iterations = 0;
    double wall_seconds = 0.0;
};

/**
 * Starting point of the coarse stage: zero coefficients, frontal pose,
 * uniform white light. Scale and translation come from a weighted
 * similarity fit of the mean-shape landmarks when landmarks are given,
 * otherwise they centre the model in the image.
 */
FaceParams initial_params(const MorphableModel& model, int width, int height, const LandmarkSet* landmarks,
                          LightingProfile lighting, const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

/**
 * Adam on the weighted coarse loss, starting from initial_params. Each
 * history entry is the loss at the parameters of that iteration; the
 * returned params are those of the last recorded entry.
 *
 * Throws Error(unconstrained_fit) when no data term can act, and
 * Error(usage) when lambda_land > 0 but `landmarks` is null.
 */
FitReport fit_coarse(const ImageRGB& image, const LandmarkSet* landmarks, const Mask& visibility,
                     const MorphableModel& model, const LossWeights& weights, const FitConfig& config = {},
                     const EmbeddingProvider* embedder = nullptr);

/// Result of the detail stage.
struct DetailResult
{
    BumpMap bump;
    std::vector<double> history;
    std::size_t saturated_pixels = 0; // covered pixels whose target offset lies outside the code range
    std::size_t missing_target_pixels = 0; // covered pixels skipped for a non-finite base or target depth
    Termination termination = Termination::max_iterations;
    int iterations = 0;
};

/**
 * Adam on L_geo between the estimated bump map and the one encoding
 * target - base on covered pixels. Uncovered pixels, and covered pixels
 * whose base or target depth is not finite, stay at code 128.
 * Throws Error(empty_surface) when no pixel is usable.
 */
DetailResult fit_detail(const DepthMap& base, const DepthMap& target_signal, const Mask& coverage,
                        const FitConfig& config = {});

/// One finite-difference probe of the objective gradient.
struct GradientCheckPoint
{
    double relative_error = 0.0;
    bool coverage_changed = false;
    std::size_t changed_probes = 0; // coordinates whose +h or -h probe changed coverage
};

/**
 * Compares the analytic gradient at `params` with central differences of
 * step `h` in every free parameter. Probes that change pixel-to-triangle
 * assignment are reported with coverage_changed set.
 */
GradientCheckPoint check_gradient(const ObjectiveInputs& inputs, const FaceParams& params, double h = 1e-5);

} // namespace facefit
