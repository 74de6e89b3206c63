// Command-line front end. Exit codes: 0 success, 1 validation failure,
// 2 runtime failure. Every nonzero exit prints a diagnostic naming the
// failing stage on stderr. Set SPLAT_LOG=quiet to suppress info lines.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "splat/image_io.hpp"
#include "splat/imaging.hpp"
#include "splat/metrics.hpp"
#include "splat/rasterizer.hpp"
#include "splat/reconstruct.hpp"
#include "splat/scene_io.hpp"
#include "splat/synthetic.hpp"
#include "splat/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool log_enabled() {
    const char* v = std::getenv("SPLAT_LOG");
    return v == nullptr || std::string(v) != "quiet";
}

void log_info(const std::string& stage, const std::string& msg) {
    if (log_enabled()) std::cerr << "[" << stage << "] " << msg << "\n";
}

[[noreturn]] void fail(int code, const std::string& stage, const std::string& msg) {
    std::cerr << "[" << stage << "] error: " << msg << "\n";
    std::exit(code);
}

bool is_image_file(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ".png" || e == ".ppm" || e == ".pgm" || e == ".pfm";
}

std::vector<fs::path> list_images(const std::string& dir, const std::string& stage) {
    if (!fs::is_directory(dir)) fail(1, stage, "not a directory: " + dir);
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) fail(1, stage, "no input images in " + dir);
    return out;
}

// Finds <stem>.<any image extension> under dir, if present.
std::optional<fs::path> find_by_stem(const std::string& dir, const std::string& stem) {
    for (const char* ext : {".png", ".ppm", ".pgm", ".pfm"}) {
        fs::path p = fs::path(dir) / (stem + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

void require_file(const std::string& path, const std::string& stage) {
    if (!fs::is_regular_file(path)) fail(1, stage, "missing file: " + path);
}

splat::TrainScene scene_to_train(const splat::SceneManifest& manifest, bool eval_split) {
    splat::TrainScene scene;
    for (const auto& view : manifest.views) {
        if ((view.split == "eval") != eval_split) continue;
        scene.images.push_back(view.image);
        scene.cameras.push_back(view.camera);
        if (view.attention) scene.attention.push_back(*view.attention);
    }
    if (!scene.attention.empty() && scene.attention.size() != scene.images.size())
        throw std::runtime_error("attention maps present for only some views");
    return scene;
}

int cmd_mask(const std::string& in_dir, const std::string& out_dir, double threshold,
             const std::string& saliency_dir) {
    const std::string stage = "mask";
    if (threshold < 0.0 || threshold > 1.0) fail(1, stage, "threshold must be in [0,1]");
    auto files = list_images(in_dir, stage);
    fs::create_directories(out_dir);
    for (const auto& file : files) {
        splat::Raster img;
        try {
            img = splat::load_image(file.string());
        } catch (const std::exception& e) {
            fail(1, stage, std::string("unreadable input: ") + e.what());
        }
        std::string stem = file.stem().string();
        splat::Raster sal;
        std::optional<fs::path> pre;
        if (!saliency_dir.empty()) pre = find_by_stem(saliency_dir, stem);
        if (pre) {
            sal = splat::load_image(pre->string());
            log_info(stage, stem + ": using precomputed saliency " + pre->string());
        } else {
            sal = splat::classical_saliency(img);
            log_info(stage, stem + ": no precomputed saliency, using gradient fallback");
        }
        splat::BinaryMask mask = splat::threshold_saliency(sal, threshold);
        splat::save_mask_pgm(mask, (fs::path(out_dir) / (stem + ".pgm")).string());
        splat::save_png(splat::composite_white(img, mask),
                        (fs::path(out_dir) / (stem + ".png")).string());
    }
    log_info(stage, std::to_string(files.size()) + " masks written to " + out_dir);
    return 0;
}

int cmd_attention(const std::string& in_dir, const std::string& out_dir) {
    const std::string stage = "attention";
    auto files = list_images(in_dir, stage);
    fs::create_directories(out_dir);
    for (const auto& file : files) {
        splat::Raster img;
        try {
            img = splat::load_image(file.string());
        } catch (const std::exception& e) {
            fail(1, stage, std::string("unreadable input: ") + e.what());
        }
        splat::Raster attn = splat::attention_mask(img);
        std::string stem = file.stem().string();
        splat::save_pnm(attn, (fs::path(out_dir) / (stem + ".pgm")).string());
        splat::save_pfm(attn, (fs::path(out_dir) / (stem + ".pfm")).string());
    }
    log_info(stage, std::to_string(files.size()) + " attention maps written to " + out_dir);
    return 0;
}

int cmd_sfm(const std::string& scene_path, const std::string& out_dir, bool no_mask,
            uint64_t seed) {
    const std::string stage = "sfm";
    require_file(scene_path, stage);
    splat::SceneManifest manifest;
    try {
        manifest = splat::load_scene(scene_path);
    } catch (const std::exception& e) {
        fail(1, stage, e.what());
    }
    if (manifest.views.size() < 2) fail(1, stage, "need at least 2 views");

    std::vector<splat::Raster> images;
    std::vector<splat::BinaryMask> masks;
    for (const auto& view : manifest.views) {
        images.push_back(view.image);
        if (no_mask || !view.mask)
            masks.emplace_back(view.image.width(), view.image.height(), true);
        else
            masks.push_back(*view.mask);
    }

    try {
        splat::SfmConfig cfg;
        cfg.seed = seed;
        splat::SfmResult result =
            splat::incremental_reconstruct(images, masks, manifest.intrinsics, cfg);
        for (const auto& w : result.warnings) log_info(stage, "warning: " + w);

        splat::SparseCloud cloud = result.cloud;
        if (!no_mask) cloud = splat::filter_background_points(cloud, result.cameras, masks);

        fs::create_directories(out_dir);
        splat::save_cloud_ply(cloud, (fs::path(out_dir) / "cloud.ply").string());
        splat::save_cameras_json(result.cameras, (fs::path(out_dir) / "cameras.json").string());
        json summary;
        summary["points"] = cloud.size();
        summary["points_before_filter"] = result.cloud.size();
        summary["mean_reprojection_error_px"] = result.mean_reprojection_error;
        summary["registered_views"] =
            std::count(result.registered.begin(), result.registered.end(), true);
        summary["masked"] = !no_mask;
        std::ofstream out((fs::path(out_dir) / "sfm_summary.json").string());
        out << summary.dump(2) << "\n";
        log_info(stage, std::to_string(cloud.size()) + " points, mean reprojection error " +
                            std::to_string(result.mean_reprojection_error) + " px");
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

int cmd_train(const std::string& scene_path, const std::string& init_path,
              const std::string& config_path, const std::string& out_dir, bool no_attention) {
    const std::string stage = "train";
    require_file(scene_path, stage);
    require_file(init_path, stage);
    splat::TrainConfig cfg;
    if (!config_path.empty()) {
        require_file(config_path, stage);
        try {
            cfg = splat::load_train_config(config_path);
        } catch (const std::exception& e) {
            fail(1, stage, e.what());
        }
    }
    if (no_attention) cfg.attention_enabled = false;

    splat::SceneManifest manifest;
    splat::GaussianCloud init;
    splat::TrainScene scene;
    try {
        manifest = splat::load_scene(scene_path);
        init = splat::load_splats(init_path);
        scene = scene_to_train(manifest, /*eval_split=*/false);
        cfg.validate();
    } catch (const std::exception& e) {
        fail(1, stage, e.what());
    }
    if (scene.images.empty()) fail(1, stage, "no train-split views in manifest");

    try {
        auto start = std::chrono::steady_clock::now();
        auto [cloud, reports] = splat::train(scene, init, cfg);
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        fs::create_directories(out_dir);
        splat::save_splats(cloud, (fs::path(out_dir) / "splats.ply").string());
        splat::save_loss_csv(reports, (fs::path(out_dir) / "loss.csv").string());
        json meta;
        meta["train_time_seconds"] = seconds;
        meta["attention_enabled"] = cfg.attention_enabled;
        meta["iterations"] = cfg.iterations;
        meta["seed"] = cfg.seed;
        meta["initial_splats"] = init.splats.size();
        meta["final_splats"] = cloud.splats.size();
        if (!reports.empty()) {
            meta["final_plain_l1"] = reports.back().plain_l1;
            meta["final_combined_loss"] = reports.back().combined;
        }
        std::ofstream out((fs::path(out_dir) / "run.json").string());
        out << meta.dump(2) << "\n";
        if (!reports.empty())
            log_info(stage, "final plain L1 " + std::to_string(reports.back().plain_l1));
        log_info(stage, "trained " + std::to_string(cloud.splats.size()) + " splats in " +
                            std::to_string(seconds) + " s");
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

int cmd_render(const std::string& splats_path, const std::string& camera_path,
               const std::string& out_path) {
    const std::string stage = "render";
    require_file(splats_path, stage);
    require_file(camera_path, stage);
    try {
        splat::GaussianCloud cloud = splat::load_splats(splats_path);
        splat::Camera camera = splat::camera_from_json_file(camera_path);
        splat::Raster img = splat::rasterize(cloud, camera, splat::RenderSettings{});
        splat::save_image(img, out_path);
        log_info(stage, "wrote " + out_path);
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

int cmd_eval(const std::string& splats_path, const std::string& scene_path,
             const std::string& out_path, double train_time) {
    const std::string stage = "eval";
    require_file(splats_path, stage);
    require_file(scene_path, stage);
    try {
        splat::GaussianCloud cloud = splat::load_splats(splats_path);
        splat::SceneManifest manifest = splat::load_scene(scene_path);
        splat::TrainScene views = scene_to_train(manifest, /*eval_split=*/true);
        if (views.images.empty()) {
            log_info(stage, "no eval-split views, evaluating on all views");
            views = scene_to_train(manifest, /*eval_split=*/false);
        }
        if (views.images.empty()) throw std::runtime_error("manifest has no views");
        splat::EvalOptions opts;
        opts.train_time_seconds = train_time;
        splat::EvalReport report = splat::evaluate(cloud, views.cameras, views.images,
                                                   views.attention, splat::RenderSettings{}, opts);
        splat::save_eval_csv(report, out_path);
        std::cout << splat::format_eval_table(report);
        log_info(stage, "wrote " + out_path);
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

int cmd_bench(const std::string& splats_path, const std::string& scene_path, int frames) {
    const std::string stage = "bench";
    if (frames < 1) fail(1, stage, "frames must be >= 1");
    require_file(splats_path, stage);
    require_file(scene_path, stage);
    try {
        splat::GaussianCloud cloud = splat::load_splats(splats_path);
        splat::SceneManifest manifest = splat::load_scene(scene_path);
        std::vector<splat::Camera> cameras;
        for (const auto& view : manifest.views) cameras.push_back(view.camera);
        if (cameras.empty()) throw std::runtime_error("manifest has no views");
        double fps = splat::fps_benchmark(cloud, cameras, splat::RenderSettings{}, frames);
        std::cout << fps << "\n";
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    const std::string stage = "synth";
    require_file(spec_path, stage);
    splat::SyntheticSpec spec;
    try {
        spec = splat::load_synthetic_spec(spec_path);
        spec.validate();
    } catch (const std::exception& e) {
        fail(1, stage, e.what());
    }
    try {
        splat::generate_synthetic(spec, out_dir);
        log_info(stage, "scene written to " + out_dir);
    } catch (const std::exception& e) {
        fail(2, stage, e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-attention Gaussian splatting pipeline"};
    app.require_subcommand(1);

    // Stages run sequentially in one process; computation is currently
    // single-threaded for determinism, so the flag is accepted but only
    // a value of 1 changes nothing. Default: machine parallelism.
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--threads", threads, "Worker thread count");

    std::string in_dir, out_dir, saliency_dir, scene_path, init_path, config_path;
    std::string splats_path, camera_path, out_path, spec_path;
    double threshold = 0.5;
    double train_time = 0.0;
    bool no_mask = false, no_attention = false;
    int frames = 100;
    uint64_t seed = 0;

    auto* mask = app.add_subcommand("mask", "Binarize saliency and composite backgrounds white");
    mask->add_option("--in", in_dir, "Input image directory")->required();
    mask->add_option("--out", out_dir, "Output directory")->required();
    mask->add_option("--threshold", threshold, "Saliency threshold in [0,1]");
    mask->add_option("--saliency-dir", saliency_dir, "Precomputed saliency maps (by stem)");

    auto* attention = app.add_subcommand("attention", "Compute gradient attention maps");
    attention->add_option("--in", in_dir, "Input image directory")->required();
    attention->add_option("--out", out_dir, "Output directory")->required();

    auto* sfm = app.add_subcommand("sfm", "Masked incremental reconstruction");
    sfm->add_option("--scene", scene_path, "Scene manifest JSON")->required();
    sfm->add_option("--out", out_dir, "Output directory")->required();
    sfm->add_flag("--no-mask", no_mask, "Ignore masks and keep background points");
    sfm->add_option("--seed", seed, "RANSAC seed");

    auto* train = app.add_subcommand("train", "Optimize a splat cloud against a scene");
    train->add_option("--scene", scene_path, "Scene manifest JSON")->required();
    train->add_option("--init", init_path, "Initial splat PLY")->required();
    train->add_option("--config", config_path, "key=value training config");
    train->add_option("--out", out_dir, "Output directory")->required();
    train->add_flag("--no-attention", no_attention, "Uniform loss weights, no attention pruning");

    auto* render = app.add_subcommand("render", "Render one view of a splat cloud");
    render->add_option("--splats", splats_path, "Splat PLY")->required();
    render->add_option("--camera", camera_path, "Camera JSON")->required();
    render->add_option("--out", out_path, "Output image (png/ppm/pfm)")->required();

    auto* eval = app.add_subcommand("eval", "Image-quality and performance report");
    eval->add_option("--splats", splats_path, "Splat PLY")->required();
    eval->add_option("--scene", scene_path, "Scene manifest JSON")->required();
    eval->add_option("--out", out_path, "Output CSV")->required();
    eval->add_option("--train-time", train_time, "Training wall-clock seconds for the Time column");

    auto* bench = app.add_subcommand("bench", "Rendering FPS benchmark");
    bench->add_option("--splats", splats_path, "Splat PLY")->required();
    bench->add_option("--scene", scene_path, "Scene manifest JSON")->required();
    bench->add_option("--frames", frames, "Frame count");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic ground-truth scene");
    synth->add_option("--spec", spec_path, "Scene spec JSON")->required();
    synth->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // bad flags are validation failures
    }

    if (mask->parsed()) return cmd_mask(in_dir, out_dir, threshold, saliency_dir);
    if (attention->parsed()) return cmd_attention(in_dir, out_dir);
    if (sfm->parsed()) return cmd_sfm(scene_path, out_dir, no_mask, seed);
    if (train->parsed()) return cmd_train(scene_path, init_path, config_path, out_dir, no_attention);
    if (render->parsed()) return cmd_render(splats_path, camera_path, out_path);
    if (eval->parsed()) return cmd_eval(splats_path, scene_path, out_path, train_time);
    if (bench->parsed()) return cmd_bench(splats_path, scene_path, frames);
    if (synth->parsed()) return cmd_synth(spec_path, out_dir);
    return 1;
}
