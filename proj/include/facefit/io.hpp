#pragma once

#include "facefit/bump_detail.hpp"
#include "facefit/edge_effectiveness.hpp"
#include "facefit/fitter.hpp"
#include "facefit/image.hpp"
#include "facefit/losses.hpp"
#include "facefit/mesh.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/occlusion.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace facefit {

namespace fs = std::filesystem;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

/// 8-bit PNG of any colour type as linear RGB in [0, 1]; `srgb` applies the sRGB decode curve.
ImageRGB read_png_rgb(const fs::path& path, bool srgb = false);
/// Values are clamped to [0, 1] and rounded to 8 bits.
void write_png_rgb(const fs::path& path, const ImageRGB& image, bool srgb = false);
/// Encodes to PNG bytes in memory (what write_png_rgb writes).
std::string encode_png_rgb(const ImageRGB& image, bool srgb = false);

/// Label map from an 8-bit grayscale or palette PNG (palette index is the label).
Grid<std::uint8_t> read_png_labels(const fs::path& path);
void write_png_gray(const fs::path& path, const Grid<std::uint8_t>& gray);

/// Edge probability map: 8-bit grayscale divided by 255.
EdgeLinesMap read_edge_map(const fs::path& path);
/// Nonzero pixels of a grayscale PNG.
Mask read_mask(const fs::path& path);

/// Bump map as an 8-bit grayscale PNG of rounded codes plus a text sidecar
/// (`<stem>.txt`) holding width, height and delta_max.
void write_bump(const fs::path& png_path, const BumpMap& bump);
BumpMap read_bump(const fs::path& png_path);
fs::path bump_sidecar_path(const fs::path& png_path);

/// Single-channel little-endian PFM; rows are stored bottom to top.
void write_pfm(const fs::path& path, const Grid<double>& map);
Grid<double> read_pfm(const fs::path& path);

/// 68 lines of "x y [confidence]" (confidence defaults to 1); '#' starts a comment.
LandmarkSet read_landmarks(const fs::path& path);
void write_landmarks(const fs::path& path, const LandmarkSet& landmarks);

/// One "x y" (column row) pair per line.
CoordinateSet read_coordinates(const fs::path& path);

/// Lines of "index name [face|occluder]"; unmarked categories are neither.
ParsingSchema read_schema(const fs::path& path);

/// Binary model container: text header terminated by "end_header",
/// then little-endian float64 arrays and uint32 indices.
void write_model(const fs::path& path, const MorphableModel& model);
MorphableModel read_model(const fs::path& path);

/// ASCII OBJ with "v x y z r g b" and 1-based "f" lines.
void export_obj(const Mesh& mesh, const fs::path& path);
std::string obj_text(const Mesh& mesh);
Mesh import_obj(const fs::path& path);

/// "key = value" lines; unknown keys raise Error(parse) naming the line.
void apply_config_text(const std::string& text, FitConfig& config, LossWeights& weights);
void load_config(const fs::path& path, FitConfig& config, LossWeights& weights);

/// Tab-separated per-iteration table of both stages.
std::string report_table(const FitReport& report);
/// Key-value summary (terminations, iteration counts, final losses).
std::string report_summary(const FitReport& report, double landmark_rmse_px);

/// Full-precision text dump of FaceParams, readable by read_params.
std::string params_text(const FaceParams& params);
FaceParams parse_params(const std::string& text, const MorphableModel& model);

} // namespace facefit
