#pragma once

#include "facefit/camera.hpp"
#include "facefit/image.hpp"
#include "facefit/mesh.hpp"
#include "facefit/rasterizer.hpp"

namespace facefit {

/**
 * Encoded per-pixel displacement Phi. Codes are real-valued in [0, 255] and
 * only quantised to 8 bits when written to a file.
 *
 * Storage is the offset from the midpoint (code - 128) in extended
 * precision: this makes decode(encode(x)) == x bit-exact for any double x
 * with |x| <= delta_max, which a plain double code cannot guarantee.
 */
struct BumpMap
{
    Grid<long double> offsets;
    double delta_max = 1.0; // displacement mapped to code 255

    int width() const noexcept { return offsets.width(); }
    int height() const noexcept { return offsets.height(); }

    double code(int row, int col) const { return static_cast<double>(128.0L + offsets(row, col)); }
    void set_code(int row, int col, double code) { offsets(row, col) = static_cast<long double>(code) - 128.0L; }

    /// All codes at the zero-displacement midpoint.
    static BumpMap neutral(int width, int height, double delta_max);

    bool operator==(const BumpMap&) const = default;
};

inline constexpr double bump_midpoint = 128.0;
inline constexpr double bump_half_range = 127.0;

/// clamp(128 + 127 * displacement / delta_max, 0, 255).
double encode_phi(double displacement, double delta_max);

/// (code - 128) * delta_max / 127. Throws Error(domain) outside [0, 255].
double decode_phi(double code, double delta_max);

/// encode_phi expressed as the extended-precision offset from 128 (clamped to [-128, 127]).
long double encode_offset(double displacement, double delta_max);

/// Inverse of encode_offset; exact for unclamped offsets.
double decode_offset(long double offset, double delta_max);

/// Covered pixels encode detailed - base; all other pixels encode 0.
BumpMap bump_from_depths(const DepthMap& detailed, const DepthMap& base, const Mask& coverage, double delta_max);

/// d'(b) = d(b) + decode(code) on finite base pixels; background stays background.
DepthMap detailed_depth(const DepthMap& base, const BumpMap& bump);

/**
 * L1 distance between the maps plus L1 distance between their forward
 * differences in x and in y (difference is 0 on the last column / row).
 */
double geo_loss(const BumpMap& estimated, const BumpMap& truth);

/// A subgradient of geo_loss with respect to the estimated codes (sign(0) = 0).
Grid<double> geo_loss_gradient(const BumpMap& estimated, const BumpMap& truth);

/// Default encoding range: 2% of the depth extent of the covered base depth.
double default_delta_max(const DepthMap& base, const Mask& coverage);

/**
 * Grid mesh over covered pixels: one vertex per covered pixel centre,
 * back-projected through the camera at `pose`; two triangles per fully
 * covered 2x2 block, one for blocks with exactly three covered pixels.
 * Vertex colours come from `colors` when given, otherwise mid grey.
 */
Mesh mesh_from_depth(const DepthMap& depth, const Mask& coverage, const Pose& pose,
                     const ProjectionMatrix& pr = ProjectionMatrix::orthographic(),
                     const ImageRGB* colors = nullptr);

} // namespace facefit
