#pragma once

#include <string>
#include <vector>

#include "splat/gaussian.hpp"
#include "splat/rasterizer.hpp"

namespace splat {

struct TrainConfig {
    int iterations = 30000;          // paper-style runs; desk-scale presets use 2000
    double lr_position = 1.6e-4;
    double lr_color = 2.5e-3;
    double lr_opacity = 5e-2;
    double lr_scale = 5e-3;
    double lr_rotation = 1e-3;
    double ssim_weight = 0.2;
    bool attention_enabled = true;
    int prune_interval = 500;
    double prune_attention_threshold = 0.05;
    double prune_opacity_threshold = 0.005;
    bool prune_attention_use_max = false;  // max-over-views scoring instead of mean
    bool densify_enabled = false;
    int densify_interval = 500;
    double densify_grad_threshold = 2e-4;
    double densify_scale_threshold = 0.01;  // relative to scene extent
    int max_splats = 1000000;
    int report_interval = 100;
    uint64_t seed = 0;

    void validate() const;
};

struct LossReport {
    int iteration = 0;
    double weighted_l1 = 0.0;
    double plain_l1 = 0.0;
    double ssim = 0.0;
    double combined = 0.0;
    size_t splat_count = 0;
};

struct TrainScene {
    std::vector<Raster> images;      // 3-channel targets
    std::vector<Camera> cameras;     // aligned with images
    std::vector<Raster> attention;   // 1-channel, [0,1]; empty => all-ones
    Vec3 background = Vec3::Ones();
};

/// Per splat, the mean (or max) of the attention value bilinearly
/// sampled at its projected center across views where it is visible.
std::vector<double> attention_score_splats(const GaussianCloud& cloud,
                                           const std::vector<Camera>& cameras,
                                           const std::vector<Raster>& attn_masks,
                                           bool use_max = false);

/// Removes splats with score < attention threshold or opacity below the
/// opacity threshold; preserves order. `keep_out`, when given, receives
/// the per-splat keep mask (for optimizer-state remapping).
GaussianCloud attention_prune(const GaussianCloud& cloud, const std::vector<double>& scores,
                              const TrainConfig& cfg, std::vector<bool>* keep_out = nullptr);

/// Clone-or-split densification gated by the mean view-space positional
/// gradient. `added_out`, when given, receives the number of appended
/// splats (splits replace their parent in place, then append one).
GaussianCloud densify(const GaussianCloud& cloud, const std::vector<double>& mean_grads,
                      const TrainConfig& cfg, double scene_extent, size_t* added_out = nullptr);

/// Attention-weighted optimization loop over all splat parameters with
/// periodic pruning (and optional densification). Deterministic for a
/// fixed seed; single-threaded.
std::pair<GaussianCloud, std::vector<LossReport>> train(const TrainScene& scene,
                                                        const GaussianCloud& init,
                                                        const TrainConfig& cfg);

/// Plain-text key=value config file, one entry per line, '#' comments.
TrainConfig load_train_config(const std::string& path);
void save_loss_csv(const std::vector<LossReport>& reports, const std::string& path);

}  // namespace splat
