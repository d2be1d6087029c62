#pragma once

#include "facefit/camera.hpp"
#include "facefit/image.hpp"
#include "facefit/losses.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/occlusion.hpp"
#include "facefit/random.hpp"
#include "facefit/rasterizer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace facefit {

/// Ranges of the random ground-truth faces used by synthetic targets.
struct TargetOptions
{
    int width = 128;
    int height = 128;
    double coefficient_scale = 0.5; // coefficients ~ N(0, (scale * sigma)^2)
    double max_angle = 0.17;        // radians, uniform in [-max, max] per axis
    double light_jitter = 0.15;     // relative SH perturbation
};

FaceParams random_face_params(const MorphableModel& model, Rng& rng, const TargetOptions& options = {});

/// Rendered image and buffers of a known parameter vector.
struct SyntheticTarget
{
    FaceParams truth;
    ImageRGB image; // black background
    LandmarkSet landmarks; // projected landmark vertices, confidence 1
    Mask coverage;
    DepthMap depth;
};

SyntheticTarget render_target(const MorphableModel& model, const FaceParams& params, int width, int height,
                              const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

LandmarkSet project_landmarks(const MorphableModel& model, const FaceParams& params,
                              const ProjectionMatrix& pr = ProjectionMatrix::orthographic());

/**
 * Visibility mask that hides a horizontal band of face pixels (an
 * eyeglass-like occluder) around `center_row`, grown row by row until at
 * least `occluded_fraction` of the covered pixels are hidden. Background
 * pixels are not visible.
 */
Mask band_visibility(const Mask& coverage, double occluded_fraction, int center_row);

/// Overwrites every pixel where `keep` is 0 with a dark frame-and-lens pattern.
void paint_eyeglasses(ImageRGB& image, const Mask& keep, Rng& rng);

/// celebamask19 labels: skin where covered and visible, eyeglass where covered
/// and hidden, background elsewhere.
ParsingMap parsing_from_masks(const Mask& coverage, const Mask& visibility);

/// 255 on covered pixels with an uncovered 4-neighbour (or the image border).
Grid<std::uint8_t> silhouette_edges(const Mask& coverage);

/// base + amplitude * sin(2 pi col / period) * cos(2 pi row / period) on covered pixels.
DepthMap sinusoid_detail(const DepthMap& base, const Mask& coverage, double amplitude, double period);

/// Writes the toy model, three rendered targets and their masks, edges,
/// landmarks and detail signals, plus manifest.txt. Returns manifest lines.
std::vector<std::string> write_fixtures(const std::filesystem::path& dir, std::uint64_t seed);

} // namespace facefit
