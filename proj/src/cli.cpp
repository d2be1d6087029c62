#include "facefit/cli.hpp"

#include "facefit/bump_detail.hpp"
#include "facefit/edge_effectiveness.hpp"
#include "facefit/errors.hpp"
#include "facefit/fitter.hpp"
#include "facefit/fixtures.hpp"
#include "facefit/io.hpp"
#include "facefit/log.hpp"
#include "facefit/objective.hpp"
#include "facefit/occlusion.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace facefit {

namespace {

std::mutex stderr_mutex;

void report_error(std::string_view code, const std::string& message)
{
    std::string line = message;
    std::replace(line.begin(), line.end(), '\n', ' ');
    const std::lock_guard<std::mutex> lock(stderr_mutex);
    std::cerr << "facefit: error[" << code << "]: " << line << std::endl;
}

int exit_code_for(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::io:
    case ErrorCode::parse:
    case ErrorCode::schema:
    case ErrorCode::shape:
    case ErrorCode::domain:
    case ErrorCode::empty_ground_truth:
    case ErrorCode::undefined_fraction:
        return exit_input;
    case ErrorCode::usage:
        return exit_usage;
    case ErrorCode::unconstrained_fit:
    case ErrorCode::non_finite_gradient:
    case ErrorCode::empty_surface:
    case ErrorCode::numeric_range:
    case ErrorCode::saturation:
    case ErrorCode::degenerate_embedding:
        return exit_fit;
    }
    return exit_internal;
}

struct ReconstructArgs
{
    std::string image;
    std::string parsing;
    std::string schema = "celebamask19";
    std::string edges;
    double edge_threshold = 0.5;
    std::string landmarks;
    std::string model;
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string detail_signal;
    bool no_detail = false;
    bool srgb = false;
    bool dump_buffers = false;
};

ParsingSchema load_schema(const std::string& name)
{
    if (name == "helen11" || name == "celebamask19")
        return ParsingSchema::builtin(name);
    return read_schema(name);
}

MorphableModel load_model(const std::string& path)
{
    return path.empty() ? make_toy_model() : read_model(path);
}

ImageRGB clamped(const ImageRGB& image, const Mask& coverage)
{
    ImageRGB out(image.width(), image.height(), Eigen::Vector3d::Zero());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (coverage[i])
            out[i] = image[i].cwiseMax(0.0).cwiseMin(1.0);
    return out;
}

double landmark_rmse(const MorphableModel& model, const FitReport& report, const LandmarkSet& target,
                     const ProjectionMatrix& pr)
{
    const LandmarkSet fitted = project_landmarks(model, report.params, pr);
    double sum = 0.0;
    int n = 0;
    for (int k = 0; k < landmark_count; ++k)
    {
        if (target.confidence[k] <= 0.0)
            continue;
        sum += (fitted.points[k] - target.points[k]).squaredNorm();
        ++n;
    }
    return n ? std::sqrt(sum / n) : std::nan("");
}

void reconstruct_one(const ReconstructArgs& a, const MorphableModel& model, const FitConfig& config,
                     const LossWeights& weights, const fs::path& image_path, const fs::path& landmarks_path,
                     const fs::path& parsing_path, const fs::path& detail_path, const fs::path& out_dir)
{
    const ImageRGB image = read_png_rgb(image_path, a.srgb);

    std::optional<LandmarkSet> landmarks;
    if (!landmarks_path.empty())
        landmarks = read_landmarks(landmarks_path);
    if (weights.lambda_land > 0.0 && !landmarks)
        throw Error(ErrorCode::usage, "landmarks required: lambda_land > 0 but no --landmarks given");

    Mask visibility(image.width(), image.height(), 1);
    if (!parsing_path.empty())
    {
        ParsingMap parsing{read_png_labels(parsing_path), load_schema(a.schema)};
        require_same_shape(parsing.labels, image, "parsing map");
        parsing.validate();
        if (!a.edges.empty())
            parsing = fuse_parsing_edges(parsing, read_edge_map(a.edges), a.edge_threshold);
        visibility = visibility_mask(parsing);
    }

    FitReport report = fit_coarse(image, landmarks ? &*landmarks : nullptr, visibility, model, weights, config);
    const SceneRender scene = render_scene(model, report.params, image.width(), image.height(), config.projection);
    const Mask& coverage = scene.raster.buffer.coverage;
    if (count_set(coverage) == 0)
        throw Error(ErrorCode::empty_surface, "fitted face covers no pixels");
    const DepthMap& base = scene.raster.depth;

    DepthMap detailed = base;
    const double delta = config.delta_max > 0.0 ? config.delta_max : default_delta_max(base, coverage);
    report.bump = BumpMap::neutral(image.width(), image.height(), delta);
    if (!detail_path.empty() && !a.no_detail)
    {
        const DepthMap signal = read_pfm(detail_path);
        require_same_shape(signal, base, "detail signal");
        FitConfig detail_config = config;
        detail_config.delta_max = delta;
        DetailResult detail = fit_detail(base, signal, coverage, detail_config);
        report.bump = std::move(detail.bump);
        report.detail_history = std::move(detail.history);
        report.saturated_pixels = detail.saturated_pixels;
        report.missing_target_pixels = detail.missing_target_pixels;
        report.detail_termination = detail.termination;
        report.detail_iterations = detail.iterations;
        report.has_bump = true;
        detailed = detailed_depth(base, report.bump);
    }

    const ImageRGB render = clamped(scene.raster.buffer.color, coverage);
    const Mesh mesh = mesh_from_depth(detailed, coverage, report.params.pose, config.projection, &render);
    const double rmse = landmarks ? landmark_rmse(model, report, *landmarks, config.projection) : std::nan("");

    fs::create_directories(out_dir);
    export_obj(mesh, out_dir / "mesh.obj");
    write_png_rgb(out_dir / "render.png", render, a.srgb);
    write_bump(out_dir / "bump.png", report.bump);
    write_file_atomic(out_dir / "report.tsv", report_table(report));
    write_file_atomic(out_dir / "summary.txt", report_summary(report, rmse));
    write_file_atomic(out_dir / "params.txt", params_text(report.params));
    if (a.dump_buffers)
    {
        write_pfm(out_dir / "base_depth.pfm", base);
        write_pfm(out_dir / "detailed_depth.pfm", detailed);
        Grid<std::uint8_t> vis(visibility.width(), visibility.height());
        for (std::size_t i = 0; i < vis.size(); ++i)
            vis[i] = visibility[i] ? 255 : 0;
        write_png_gray(out_dir / "visibility.png", vis);
    }
    log_info(image_path.string() + ": " + std::to_string(report.coarse_iterations) + " coarse iterations, " +
             to_string(report.coarse_termination));
}

/// Runs `body`, converting exceptions to the diagnostic line and exit code.
template <typename F>
int guarded(F&& body)
{
    try
    {
        body();
        return exit_ok;
    }
    catch (const Error& e)
    {
        report_error(to_string(e.code()), e.what());
        return exit_code_for(e.code());
    }
    catch (const fs::filesystem_error& e)
    {
        report_error("io", e.what());
        return exit_input;
    }
    catch (const std::exception& e)
    {
        report_error("internal", e.what());
        return exit_internal;
    }
}

fs::path companion(const fs::path& image, const std::string& suffix)
{
    fs::path p = image.parent_path() / (image.stem().string() + suffix);
    return fs::exists(p) ? p : fs::path();
}

int cmd_reconstruct(const ReconstructArgs& a)
{
    FitConfig config;
    LossWeights weights;
    MorphableModel model;
    const int setup = guarded([&] {
        if (!a.config.empty())
            load_config(a.config, config, weights);
        config.seed = a.seed;
        model = load_model(a.model);
    });
    if (setup != exit_ok)
        return setup;

    if (!fs::is_directory(a.image))
    {
        return guarded([&] {
            if (!fs::exists(a.image))
                throw Error(ErrorCode::io, a.image + ": input image does not exist");
            reconstruct_one(a, model, config, weights, a.image, a.landmarks, a.parsing, a.detail_signal, a.out_dir);
        });
    }

    // Directory mode: <stem>.png with optional <stem>.landmarks.txt,
    // <stem>.parsing.png and <stem>.detail.pfm companions.
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(a.image))
    {
        const fs::path& p = entry.path();
        const std::string name = p.filename().string();
        if (p.extension() == ".png" && name.find(".parsing.") == std::string::npos)
            images.push_back(p);
    }
    std::sort(images.begin(), images.end());
    if (images.empty())
    {
        report_error("io", a.image + ": no PNG images in directory");
        return exit_input;
    }
    std::vector<int> codes(images.size(), exit_ok);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < images.size(); i = next++)
        {
            const fs::path& img = images[i];
            codes[i] = guarded([&] {
                reconstruct_one(a, model, config, weights, img, companion(img, ".landmarks.txt"),
                                companion(img, ".parsing.png"), companion(img, ".detail.pfm"),
                                fs::path(a.out_dir) / img.stem());
            });
        }
    };
    const int jobs = std::clamp(a.jobs, 1, static_cast<int>(images.size()));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return *std::max_element(codes.begin(), codes.end());
}

} // namespace

int run_cli(const std::vector<std::string>& args)
{
    init_logging();
    CLI::App app{"Occlusion-aware 3D face reconstruction by model fitting", "facefit"};
    app.require_subcommand(1);

    ReconstructArgs rec;
    auto* reconstruct = app.add_subcommand("reconstruct", "Fit the face model to an image and export mesh and maps");
    reconstruct->add_option("--image", rec.image, "Input PNG image, or a directory of images")->required();
    reconstruct->add_option("--parsing,--mask", rec.parsing, "Face parsing label map (8-bit PNG)");
    reconstruct->add_option("--schema", rec.schema, "Parsing schema: helen11, celebamask19 or a schema file");
    reconstruct->add_option("--edges", rec.edges, "Edge lines map (8-bit PNG) fused into the parsing map");
    reconstruct->add_option("--edge-threshold", rec.edge_threshold, "Edge strength counted as a boundary");
    reconstruct->add_option("--landmarks", rec.landmarks, "68 landmarks, one 'x y [confidence]' per line");
    reconstruct->add_option("--model", rec.model, "Model container (default: built-in toy model)");
    reconstruct->add_option("--config", rec.config, "Fit configuration (key = value)");
    reconstruct->add_option("--out-dir", rec.out_dir, "Output directory")->required();
    reconstruct->add_option("--seed", rec.seed, "Random seed");
    reconstruct->add_option("--jobs", rec.jobs, "Parallel images in directory mode")->check(CLI::PositiveNumber);
    reconstruct->add_option("--detail-signal", rec.detail_signal, "Detail-bearing depth map (PFM) for the bump stage");
    reconstruct->add_flag("--no-detail", rec.no_detail, "Skip the bump-map stage");
    reconstruct->add_flag("--srgb", rec.srgb, "Decode input and encode output with the sRGB curve");
    reconstruct->add_flag("--dump-buffers", rec.dump_buffers, "Also write depth maps and the visibility mask");

    std::string fixtures_dir;
    std::uint64_t fixtures_seed = 0;
    auto* fixtures = app.add_subcommand("make-fixtures", "Write the toy model and synthetic test fixtures");
    fixtures->add_option("--out-dir", fixtures_dir, "Output directory")->required();
    fixtures->add_option("--seed", fixtures_seed, "Random seed");

    std::string toy_out;
    ToyModelOptions toy;
    auto* make_model = app.add_subcommand("make-toy-model", "Write the synthetic morphable model container");
    make_model->add_option("--out", toy_out, "Output .ffm path")->required();
    make_model->add_option("--seed", toy.seed, "Random seed");
    make_model->add_option("--subdivisions", toy.subdivisions, "Icosphere level (2-5)");

    std::string render_model, render_params, render_out;
    int render_w = 128, render_h = 128;
    bool render_srgb = false;
    auto* render = app.add_subcommand("render", "Render a saved parameter file");
    render->add_option("--model", render_model, "Model container (default: built-in toy model)");
    render->add_option("--params", render_params, "Parameter file written by reconstruct")->required();
    render->add_option("--width", render_w, "Image width")->check(CLI::PositiveNumber);
    render->add_option("--height", render_h, "Image height")->check(CLI::PositiveNumber);
    render->add_option("--out", render_out, "Output PNG")->required();
    render->add_flag("--srgb", render_srgb, "Encode with the sRGB curve");

    std::string score_edges, score_coords;
    double theta = 2.0, delta = 0.5, score_threshold = 0.5;
    std::optional<double> d_gen, d_real;
    auto* score = app.add_subcommand("score-edges", "Effectiveness label of generated edge coordinates");
    score->add_option("--edges", score_edges, "Ground-truth edge lines map (8-bit PNG)")->required();
    score->add_option("--coords", score_coords, "Generated coordinates, one 'x y' per line")->required();
    score->add_option("--theta", theta, "Distance threshold in pixels");
    score->add_option("--delta", delta, "Fraction threshold");
    score->add_option("--threshold", score_threshold, "Edge strength treated as ground truth");
    score->add_option("--d-gen", d_gen, "Discriminator output on the generated map");
    score->add_option("--d-real", d_real, "Discriminator output on the real map");

    std::vector<const char*> argv;
    for (const std::string& s : args)
        argv.push_back(s.c_str());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::Success& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        report_error("usage", e.what());
        return exit_usage;
    }

    if (*reconstruct)
        return cmd_reconstruct(rec);
    if (*fixtures)
        return guarded([&] {
            const auto lines = write_fixtures(fixtures_dir, fixtures_seed);
            std::cout << "wrote " << lines.size() << " fixtures to " << fixtures_dir << "\n";
        });
    if (*make_model)
        return guarded([&] { write_model(toy_out, make_toy_model(toy)); });
    if (*render)
        return guarded([&] {
            const MorphableModel model = load_model(render_model);
            const FaceParams params = parse_params(read_file(render_params), model);
            const SceneRender scene = render_scene(model, params, render_w, render_h);
            write_png_rgb(render_out, clamped(scene.raster.buffer.color, scene.raster.buffer.coverage), render_srgb);
        });
    if (*score)
        return guarded([&] {
            const DistanceField field = distance_field(read_edge_map(score_edges), score_threshold);
            const CoordinateSet coords = read_coordinates(score_coords);
            const double fraction = effective_fraction(coords, field, theta);
            const int label = ground_truth_label(coords, field, theta, delta);
            std::printf("fraction %.17g\nlabel %d\n", fraction, label);
            if (d_gen && d_real)
                std::printf("discriminator_loss %.17g\n", discriminator_loss(*d_gen, label, *d_real));
            if (d_gen)
                std::printf("adversarial_loss %.17g\n", adversarial_loss(*d_gen));
        });
    return exit_usage;
}

int run_cli(int argc, char** argv)
{
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

} // namespace facefit
