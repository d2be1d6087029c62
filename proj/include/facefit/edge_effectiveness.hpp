#pragma once

#include "facefit/image.hpp"

#include <span>
#include <vector>

namespace facefit {

/// Per-pixel edge probability in [0, 1].
using EdgeLinesMap = Grid<double>;

struct PixelCoord
{
    int x = 0; // column
    int y = 0; // row

    bool operator==(const PixelCoord&) const = default;
};

using CoordinateSet = std::vector<PixelCoord>;

/// Euclidean distance (pixels) to the nearest ground-truth edge pixel.
using DistanceField = Grid<double>;

/// Clamp applied to log arguments before the saturation error is raised.
inline constexpr double log_epsilon = 1e-7;

/**
 * Exact Euclidean distance transform of {p : gt_edges(p) >= threshold}
 * (separable lower-envelope algorithm, squared distances are exact integers).
 * Throws Error(empty_ground_truth) if no pixel reaches the threshold.
 */
DistanceField distance_field(const EdgeLinesMap& gt_edges, double threshold);

/// Fraction of coordinates whose distance to the ground truth is < theta.
double effective_fraction(const CoordinateSet& coords, const DistanceField& field, double theta);

/**
 * Effectiveness label d_gt: 0 when the fraction of coordinates lying within
 * theta of the ground-truth edges is below delta, otherwise 1. Label 1
 * means the generated edge map is effective (close to ground truth).
 */
int ground_truth_label(const CoordinateSet& coords, const DistanceField& field, double theta, double delta);

/// log(1 - |d_gen - d_gt|) - log(d_real), averaged over the batch.
/// Throws SaturationError (carrying the epsilon-clamped value) when a log
/// argument is below epsilon.
double discriminator_loss(std::span<const double> d_gen, std::span<const int> d_gt_label,
                          std::span<const double> d_real);
double discriminator_loss(double d_gen, int d_gt_label, double d_real);

/// log(1 - d_gen), averaged over the batch; SaturationError when 1 - d_gen < epsilon.
double adversarial_loss(std::span<const double> d_gen);
double adversarial_loss(double d_gen);

/// Mean squared difference over all pixels.
double edge_mse(const EdgeLinesMap& estimated, const EdgeLinesMap& truth);

} // namespace facefit
