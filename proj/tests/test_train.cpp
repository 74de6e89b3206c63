#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splat/synthetic.hpp"
#include "splat/train.hpp"

using namespace splat;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TrainScene small_scene(uint64_t seed, int views, GaussianCloud* gt_out) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.views = views;
    spec.image_size = 48;
    spec.phantom_splats = 8;
    auto scene = generate_synthetic_scene(spec);
    if (gt_out) *gt_out = scene.ground_truth;
    TrainScene ts;
    ts.images = scene.images;
    ts.cameras = scene.cameras;
    ts.attention = scene.attention;
    return ts;
}

}  // namespace

TEST_CASE("attention_score_splats samples the maps at projected centers") {
    // one splat dead ahead of a single camera; attention is a gradient
    // so the bilinear sample at the center pixel is known
    GaussianCloud cloud;
    Splat s;
    s.position = Vec3(0, 0, 2);
    cloud.splats.push_back(s);
    Camera cam;
    cam.fx = cam.fy = 40;
    cam.cx = cam.cy = 15.5;
    cam.width = cam.height = 32;
    Raster attn(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) attn.at(x, y) = x / 31.0;
    auto scores = attention_score_splats(cloud, {cam}, {attn});
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == doctest::Approx(15.5 / 31.0).epsilon(1e-9));
}

TEST_CASE("attention_score_splats averages views and supports max") {
    GaussianCloud cloud;
    Splat s;
    s.position = Vec3(0, 0, 2);
    cloud.splats.push_back(s);
    Camera cam;
    cam.fx = cam.fy = 40;
    cam.cx = cam.cy = 15.5;
    cam.width = cam.height = 32;
    Raster low(32, 32, 1, 0.2), high(32, 32, 1, 0.8);
    auto mean_scores = attention_score_splats(cloud, {cam, cam}, {low, high}, false);
    auto max_scores = attention_score_splats(cloud, {cam, cam}, {low, high}, true);
    CHECK(mean_scores[0] == doctest::Approx(0.5));
    CHECK(max_scores[0] == doctest::Approx(0.8));
}

TEST_CASE("splats invisible in every view score zero") {
    GaussianCloud cloud;
    Splat s;
    s.position = Vec3(0, 0, -5);  // behind the camera
    cloud.splats.push_back(s);
    Camera cam;
    cam.fx = cam.fy = 40;
    cam.cx = cam.cy = 15.5;
    cam.width = cam.height = 32;
    Raster attn(32, 32, 1, 0.9);
    auto scores = attention_score_splats(cloud, {cam}, {attn});
    CHECK(scores[0] == 0.0);
}

TEST_CASE("attention_prune drops low-score and low-opacity splats, keeping order") {
    GaussianCloud cloud;
    for (int i = 0; i < 4; ++i) {
        Splat s;
        s.position = Vec3(i, 0, 0);
        s.opacity_logit = 3.0;
        cloud.splats.push_back(s);
    }
    cloud.splats[3].opacity_logit = -8.0;  // opacity ~3e-4, below the floor
    std::vector<double> scores = {0.5, 0.01, 0.5, 0.5};
    TrainConfig cfg;  // prune_attention_threshold 0.05, opacity floor 0.005
    std::vector<bool> keep;
    GaussianCloud pruned = attention_prune(cloud, scores, cfg, &keep);
    REQUIRE(pruned.size() == 2);
    CHECK(pruned.splats[0].position.x() == 0);
    CHECK(pruned.splats[1].position.x() == 2);
    CHECK(keep == std::vector<bool>({true, false, true, false}));
}

TEST_CASE("densify clones small splats and splits large ones") {
    GaussianCloud cloud;
    Splat small;
    small.log_scale = Vec3::Constant(std::log(0.001));
    Splat large;
    large.log_scale = Vec3(std::log(0.5), std::log(0.1), std::log(0.1));
    cloud.splats = {small, large};
    TrainConfig cfg;
    cfg.densify_grad_threshold = 1e-4;
    std::vector<double> grads = {1e-3, 1e-3};  // both above threshold
    size_t added = 0;
    GaussianCloud out = densify(cloud, grads, cfg, 1.0, &added);
    REQUIRE(out.size() == 4);
    CHECK(added == 2);
    // clone: copy appended with identical scale
    CHECK(out.splats[2].log_scale == cloud.splats[0].log_scale);
    // split: both children shrink by log(1.6) along every axis
    CHECK(out.splats[1].log_scale(0) ==
          doctest::Approx(large.log_scale(0) - std::log(1.6)));
    CHECK(out.splats[3].log_scale(0) ==
          doctest::Approx(large.log_scale(0) - std::log(1.6)));
    // children straddle the parent along its widest axis
    CHECK(out.splats[1].position.x() * out.splats[3].position.x() < 0.0);
}

TEST_CASE("train with zero iterations returns the init unchanged") {
    GaussianCloud gt;
    TrainScene ts = small_scene(2, 2, &gt);
    TrainConfig cfg;
    cfg.iterations = 0;
    auto [cloud, reports] = train(ts, gt, cfg);
    REQUIRE(cloud.size() == gt.size());
    for (size_t i = 0; i < gt.size(); ++i) {
        CHECK(cloud.splats[i].position == gt.splats[i].position);
        CHECK(cloud.splats[i].color == gt.splats[i].color);
    }
}

TEST_CASE("training strictly reduces the loss on a perturbed phantom") {
    GaussianCloud gt;
    TrainScene ts = small_scene(5, 3, &gt);
    GaussianCloud init = gt;
    for (auto& s : init.splats) s.position += Vec3(0.05, -0.04, 0.03);
    TrainConfig cfg;
    cfg.iterations = 60;
    cfg.report_interval = 10;
    cfg.prune_attention_threshold = 0.0;
    cfg.prune_opacity_threshold = 0.0;
    auto [cloud, reports] = train(ts, init, cfg);
    REQUIRE(reports.size() >= 2);
    CHECK(reports.back().combined < reports.front().combined);
    CHECK(reports.back().iteration == 60);
    for (const auto& r : reports) CHECK(r.splat_count == gt.size());
}

TEST_CASE("training is deterministic for a fixed seed") {
    GaussianCloud gt;
    TrainScene ts = small_scene(8, 2, &gt);
    GaussianCloud init = gt;
    for (auto& s : init.splats) s.position += Vec3(0.02, 0.02, -0.02);
    TrainConfig cfg;
    cfg.iterations = 25;
    cfg.seed = 123;
    cfg.prune_attention_threshold = 0.0;
    cfg.prune_opacity_threshold = 0.0;
    auto a = train(ts, init, cfg).first;
    auto b = train(ts, init, cfg).first;
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.splats[i].position == b.splats[i].position);
        CHECK(a.splats[i].rotation == b.splats[i].rotation);
        CHECK(a.splats[i].log_scale == b.splats[i].log_scale);
        CHECK(a.splats[i].opacity_logit == b.splats[i].opacity_logit);
        CHECK(a.splats[i].color == b.splats[i].color);
    }
}

TEST_CASE("train config file round trip and validation") {
    std::string path = temp_path("train_cfg_test.txt");
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "iterations=250\n";
        out << "lr_position=0.002\n";
        out << "attention_enabled=false\n";
        out << "prune_attention_threshold=0.1\n";
        out << "seed=42\n";
    }
    TrainConfig cfg = load_train_config(path);
    CHECK(cfg.iterations == 250);
    CHECK(cfg.lr_position == doctest::Approx(0.002));
    CHECK_FALSE(cfg.attention_enabled);
    CHECK(cfg.prune_attention_threshold == doctest::Approx(0.1));
    CHECK(cfg.seed == 42);
    {
        std::ofstream out(path);
        out << "not_a_real_key=1\n";
    }
    CHECK_THROWS(load_train_config(path));
    std::remove(path.c_str());

    TrainConfig bad;
    bad.iterations = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = TrainConfig{};
    bad.lr_position = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("loss csv has the declared header and one row per report") {
    std::vector<LossReport> reports(2);
    reports[0] = {100, 0.5, 0.6, 0.9, 0.42, 10};
    reports[1] = {200, 0.25, 0.3, 0.95, 0.21, 9};
    std::string path = temp_path("loss_csv_test.csv");
    save_loss_csv(reports, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,weighted_l1,plain_l1,ssim,combined,splat_count");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::remove(path.c_str());
}
