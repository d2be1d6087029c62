#pragma once

#include "facefit/camera.hpp"
#include "facefit/image.hpp"
#include "facefit/losses.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/rasterizer.hpp"

namespace facefit {

/// Everything the forward model produces for one parameter vector.
struct SceneRender
{
    Eigen::VectorXd shape;           // model space, interleaved
    Eigen::VectorXd albedo_unclamped;
    Eigen::Matrix3Xd albedo;         // clamped, 3 x V
    Eigen::Matrix3Xd model_normals;  // from `shape`
    Eigen::Matrix3Xd camera_normals; // R * model_normals
    Eigen::Matrix3Xd shaded;         // unclamped
    Projection projection;
    RasterResult raster;
};

/// Assemble, light, project and rasterize the face described by `params`.
SceneRender render_scene(const MorphableModel& model, const FaceParams& params, int width, int height,
                         const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

struct ObjectiveInputs
{
    const MorphableModel* model = nullptr;
    const ImageRGB* target = nullptr;
    const Mask* visibility = nullptr;
    const LandmarkSet* landmarks = nullptr;      // required when lambda_land > 0
    const EmbeddingProvider* embedder = nullptr; // MeanPoolEmbedder when null
    LossWeights weights;
    ProjectionMatrix pr = ProjectionMatrix::orthographic();
};

struct ObjectiveValue
{
    LossComponents components;
    double total = 0.0;
    std::size_t active_pixels = 0;
    bool feature_degenerate = false; // embedding had no direction; L_feat taken as 0
    FaceParams gradient;             // d total / d params, only when requested
    Grid<std::int32_t> tri_index;    // coverage the gradient was computed at
};

/**
 * Weighted four-part loss and, optionally, its gradient at fixed
 * rasterization coverage. The feature term embeds render and target with
 * every non-active pixel set to black, so pixels outside the visibility
 * mask influence no term.
 */
ObjectiveValue evaluate_objective(const ObjectiveInputs& inputs, const FaceParams& params, bool with_gradient);

/// Projected positions of the model's landmark vertices (2 x 68).
Eigen::Matrix2Xd landmark_positions(const MorphableModel& model, const Projection& projection);

} // namespace facefit
