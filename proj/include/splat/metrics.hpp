#pragma once

#include <string>
#include <vector>

#include "splat/gaussian.hpp"
#include "splat/rasterizer.hpp"

namespace splat {

struct EvalReport {
    double ssim = 0.0;
    double psnr = 0.0;  // +infinity when images are identical
    double l1 = 0.0;
    double loss = 0.0;
    double fps = 0.0;
    double train_time_seconds = 0.0;
    size_t size_bytes = 0;
};

/// Mean absolute difference over all pixel-channels.
double l1_metric(const Raster& a, const Raster& b);

/// 10 log10(1/MSE) with MAX = 1; identical images give +infinity.
double psnr(const Raster& a, const Raster& b);

/// Windowed SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03,
/// L 1); rejects images smaller than the window.
double ssim(const Raster& a, const Raster& b);

/// Frames per second of forward rendering over the camera list,
/// cycling; the first warm-up frame is excluded from timing.
double fps_benchmark(const GaussianCloud& cloud, const std::vector<Camera>& cameras,
                     const RenderSettings& settings, int frames);

/// Exact byte length of the serialized splat PLY.
size_t model_size(const GaussianCloud& cloud);

struct EvalOptions {
    double ssim_weight = 0.2;       // for the combined Loss column
    int fps_frames = 10;
    double train_time_seconds = 0.0;  // recorded externally, passed through
};

/// Renders each eval view, averages per-view SSIM/PSNR/L1/Loss, and
/// attaches FPS, model size, and training time.
EvalReport evaluate(const GaussianCloud& cloud, const std::vector<Camera>& views,
                    const std::vector<Raster>& targets,
                    const std::vector<Raster>& attn_masks, const RenderSettings& settings,
                    const EvalOptions& opts = {});

/// CSV row (with header) in the column order
/// SSIM,PSNR,L1,Loss,FPS,Time,Size(MB).
void save_eval_csv(const EvalReport& report, const std::string& path);
std::string format_eval_table(const EvalReport& report);

}  // namespace splat
