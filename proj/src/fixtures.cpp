#include "facefit/fixtures.hpp"

#include "facefit/bump_detail.hpp"
#include "facefit/errors.hpp"
#include "facefit/illumination.hpp"
#include "facefit/io.hpp"
#include "facefit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace facefit {

FaceParams random_face_params(const MorphableModel& model, Rng& rng, const TargetOptions& o)
{
    FaceParams p = FaceParams::zeros(model);
    for (int i = 0; i < model.n_id(); ++i)
        p.alpha_id[i] = o.coefficient_scale * model.id_sigma()[i] * rng.normal();
    for (int i = 0; i < model.n_exp(); ++i)
        p.beta_exp[i] = o.coefficient_scale * model.exp_sigma()[i] * rng.normal();
    for (int i = 0; i < model.n_tex(); ++i)
        p.beta_tex[i] = o.coefficient_scale * model.tex_sigma()[i] * rng.normal();

    ShVector light = ShVector::Zero();
    light[0] = uniform_light_coefficient() * (1.0 + o.light_jitter * rng.uniform(-1.0, 1.0));
    for (int k = 1; k < 9; ++k)
        light[k] = (k < 4 ? 2.0 : 1.0) * o.light_jitter * rng.uniform(-1.0, 1.0);
    for (int c = 0; c < 3; ++c)
        p.gamma.col(c) = light;

    p.pose.pitch = o.max_angle * rng.uniform(-1.0, 1.0);
    p.pose.yaw = o.max_angle * rng.uniform(-1.0, 1.0);
    p.pose.roll = o.max_angle * rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3Xd mean = as_columns(model.mean_shape());
    const double span = (mean.topRows<2>().rowwise().maxCoeff() - mean.topRows<2>().rowwise().minCoeff()).maxCoeff();
    p.pose.f = 0.8 * std::min(o.width, o.height) / span * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
    p.pose.t2d = Eigen::Vector3d(0.5 * o.width + 3.0 * rng.uniform(-1.0, 1.0),
                                 0.5 * o.height + 3.0 * rng.uniform(-1.0, 1.0), 10.0 * mean.cwiseAbs().maxCoeff());
    return p;
}

LandmarkSet project_landmarks(const MorphableModel& model, const FaceParams& params, const ProjectionMatrix& pr)
{
    const Projection proj = project_vertices(assemble_shape(model, params), params.pose, pr);
    const Eigen::Matrix2Xd lm = landmark_positions(model, proj);
    LandmarkSet set;
    for (int k = 0; k < landmark_count; ++k)
    {
        set.points[k] = lm.col(k);
        set.confidence[k] = 1.0;
    }
    return set;
}

SyntheticTarget render_target(const MorphableModel& model, const FaceParams& params, int width, int height,
                              const ProjectionMatrix& pr)
{
    SceneRender scene = render_scene(model, params, width, height, pr);
    SyntheticTarget t;
    t.truth = params;
    t.image = ImageRGB(width, height, Eigen::Vector3d::Zero());
    for (std::size_t i = 0; i < t.image.size(); ++i)
        if (scene.raster.buffer.coverage[i])
            t.image[i] = scene.raster.buffer.color[i];
    t.landmarks = project_landmarks(model, params, pr);
    t.coverage = std::move(scene.raster.buffer.coverage);
    t.depth = std::move(scene.raster.depth);
    return t;
}

Mask band_visibility(const Mask& coverage, double occluded_fraction, int center_row)
{
    const std::size_t total = count_set(coverage);
    const int h = coverage.height(), w = coverage.width();
    std::vector<std::size_t> per_row(h, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            per_row[r] += coverage(r, c);
    const auto need = static_cast<std::size_t>(std::ceil(occluded_fraction * static_cast<double>(total)));
    int lo = std::clamp(center_row, 0, h - 1), hi = lo;
    std::size_t hidden = per_row[lo];
    while (hidden < need && (lo > 0 || hi < h - 1))
    {
        // Grow towards the side with more face pixels so the band stays compact.
        const std::size_t up = lo > 0 ? per_row[lo - 1] : 0, down = hi < h - 1 ? per_row[hi + 1] : 0;
        if ((up >= down && lo > 0) || hi == h - 1)
            hidden += per_row[--lo];
        else
            hidden += per_row[++hi];
    }
    Mask vis(w, h, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            vis(r, c) = coverage(r, c) && (r < lo || r > hi);
    return vis;
}

void paint_eyeglasses(ImageRGB& image, const Mask& keep, Rng& rng)
{
    require_same_shape(image, keep, "eyeglass mask");
    const Eigen::Vector3d frame(0.05, 0.04, 0.03);
    const Eigen::Vector3d lens(0.55 + 0.2 * rng.uniform(), 0.6 + 0.2 * rng.uniform(), 0.7 + 0.2 * rng.uniform());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c)
            if (!keep(r, c))
                image(r, c) = ((r + c) % 7 == 0 || r % 5 == 0) ? frame : lens;
}

ParsingMap parsing_from_masks(const Mask& coverage, const Mask& visibility)
{
    require_same_shape(coverage, visibility, "parsing masks");
    ParsingMap map{Grid<std::uint8_t>(coverage.width(), coverage.height(), 0), ParsingSchema::celebamask19()};
    const std::uint8_t skin = static_cast<std::uint8_t>(map.schema.label_of("skin"));
    const std::uint8_t glass = static_cast<std::uint8_t>(map.schema.label_of("eyeglass"));
    for (std::size_t i = 0; i < coverage.size(); ++i)
        if (coverage[i])
            map.labels[i] = visibility[i] ? skin : glass;
    return map;
}

Grid<std::uint8_t> silhouette_edges(const Mask& coverage)
{
    const int h = coverage.height(), w = coverage.width();
    Grid<std::uint8_t> edges(w, h, 0);
    const auto at = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w && coverage(r, c); };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (coverage(r, c) && (!at(r - 1, c) || !at(r + 1, c) || !at(r, c - 1) || !at(r, c + 1)))
                edges(r, c) = 255;
    return edges;
}

DepthMap sinusoid_detail(const DepthMap& base, const Mask& coverage, double amplitude, double period)
{
    require_same_shape(base, coverage, "sinusoid_detail");
    DepthMap out = base;
    const double k = 2.0 * std::numbers::pi / period;
    for (int r = 0; r < base.height(); ++r)
        for (int c = 0; c < base.width(); ++c)
            if (coverage(r, c))
                out(r, c) = base(r, c) + amplitude * std::sin(k * c) * std::cos(k * r);
    return out;
}

std::vector<std::string> write_fixtures(const std::filesystem::path& dir, std::uint64_t seed)
{
    std::vector<std::string> manifest;
    const auto add = [&](const std::string& file, const std::string& kind, const std::string& note) {
        manifest.push_back(file + "\t" + kind + "\t" + note);
    };

    ToyModelOptions model_opts;
    const MorphableModel model = make_toy_model(model_opts);
    write_model(dir / "toy_model.ffm", model);
    add("toy_model.ffm", "model", "toy morphable model (" + std::to_string(model.vertex_count()) + " vertices)");

    Rng rng(seed);
    const TargetOptions opts;
    for (int k = 0; k < 3; ++k)
    {
        const std::string s = std::to_string(k);
        const FaceParams truth = random_face_params(model, rng, opts);
        const SyntheticTarget target = render_target(model, truth, opts.width, opts.height);

        write_png_rgb(dir / ("target_" + s + ".png"), target.image);
        add("target_" + s + ".png", "image", "self-rendered target");
        write_file_atomic(dir / ("params_" + s + ".txt"), params_text(truth));
        add("params_" + s + ".txt", "params", "ground-truth parameters of target_" + s);
        write_landmarks(dir / ("landmarks_" + s + ".txt"), target.landmarks);
        add("landmarks_" + s + ".txt", "landmarks", "projected landmark vertices of target_" + s);

        int top = target.coverage.height(), bottom = -1;
        for (int r = 0; r < target.coverage.height(); ++r)
            for (int c = 0; c < target.coverage.width(); ++c)
                if (target.coverage(r, c))
                {
                    top = std::min(top, r);
                    bottom = std::max(bottom, r);
                }
        const int eye_row = top + static_cast<int>(0.38 * (bottom - top));
        const Mask visibility = k == 1 ? band_visibility(target.coverage, 0.3, eye_row) : target.coverage;
        const ParsingMap parsing = parsing_from_masks(target.coverage, visibility);
        write_png_gray(dir / ("parsing_" + s + ".png"), parsing.labels);
        add("parsing_" + s + ".png", "parsing", "celebamask19 labels of target_" + s);

        Grid<std::uint8_t> vis_png(visibility.width(), visibility.height(), 0);
        for (std::size_t i = 0; i < vis_png.size(); ++i)
            vis_png[i] = visibility[i] ? 255 : 0;
        write_png_gray(dir / ("visibility_" + s + ".png"), vis_png);
        add("visibility_" + s + ".png", "mask", "visible face pixels of target_" + s);

        ImageRGB occluded = target.image;
        paint_eyeglasses(occluded, visibility, rng);
        write_png_rgb(dir / ("occluded_" + s + ".png"), occluded);
        add("occluded_" + s + ".png", "image", "target_" + s + " with hidden pixels overwritten");

        write_png_gray(dir / ("edges_" + s + ".png"), silhouette_edges(target.coverage));
        add("edges_" + s + ".png", "edges", "silhouette edge map of target_" + s);

        const double delta = default_delta_max(target.depth, target.coverage);
        write_pfm(dir / ("base_depth_" + s + ".pfm"), target.depth);
        add("base_depth_" + s + ".pfm", "depth", "rendered depth of target_" + s);
        write_pfm(dir / ("detail_" + s + ".pfm"), sinusoid_detail(target.depth, target.coverage, 0.5 * delta, 16.0));
        add("detail_" + s + ".pfm", "depth", "base depth plus sinusoidal detail within delta_max");
    }

    std::string text = "# file\tkind\tdescription\n";
    for (const std::string& line : manifest)
        text += line + "\n";
    write_file_atomic(dir / "manifest.txt", text);
    return manifest;
}

} // namespace facefit
