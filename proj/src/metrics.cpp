#include "splat/metrics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "splat/loss.hpp"
#include "splat/scene_io.hpp"

namespace splat {

double l1_metric(const Raster& a, const Raster& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("l1_metric: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += std::abs(a.data()[i] - b.data()[i]);
    return sum / static_cast<double>(a.size());
}

double psnr(const Raster& a, const Raster& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("psnr: dimension mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Raster& a, const Raster& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.width() < 11 || a.height() < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    return ssim_mean(a, b);
}

double fps_benchmark(const GaussianCloud& cloud, const std::vector<Camera>& cameras,
                     const RenderSettings& settings, int frames) {
    if (frames < 1) throw std::invalid_argument("fps_benchmark: frames must be >= 1");
    if (cameras.empty()) throw std::invalid_argument("fps_benchmark: no cameras");

    rasterize(cloud, cameras[0], settings);  // warm-up, excluded

    auto start = std::chrono::steady_clock::now();
    for (int f = 0; f < frames; ++f)
        rasterize(cloud, cameras[f % cameras.size()], settings);
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    double seconds = std::max(elapsed.count(), 1e-12);
    return frames / seconds;
}

size_t model_size(const GaussianCloud& cloud) {
    return serialize_splats(cloud).size();
}

EvalReport evaluate(const GaussianCloud& cloud, const std::vector<Camera>& views,
                    const std::vector<Raster>& targets,
                    const std::vector<Raster>& attn_masks, const RenderSettings& settings,
                    const EvalOptions& opts) {
    if (views.size() != targets.size() || views.empty())
        throw std::invalid_argument("evaluate: views/targets misaligned");
    if (!attn_masks.empty() && attn_masks.size() != views.size())
        throw std::invalid_argument("evaluate: attention masks misaligned");

    EvalReport rep;
    rep.train_time_seconds = opts.train_time_seconds;
    for (size_t v = 0; v < views.size(); ++v) {
        Raster rendered = rasterize(cloud, views[v], settings);
        rep.ssim += ssim(rendered, targets[v]);
        rep.psnr += psnr(rendered, targets[v]);
        rep.l1 += l1_metric(rendered, targets[v]);
        const Raster ones(rendered.width(), rendered.height(), 1, 1.0);
        const Raster& attn = attn_masks.empty() ? ones : attn_masks[v];
        rep.loss += combined_loss(rendered, targets[v], attn, opts.ssim_weight).first;
    }
    const double n = static_cast<double>(views.size());
    rep.ssim /= n;
    rep.psnr /= n;
    rep.l1 /= n;
    rep.loss /= n;
    rep.fps = fps_benchmark(cloud, views, settings, opts.fps_frames);
    rep.size_bytes = model_size(cloud);
    return rep;
}

void save_eval_csv(const EvalReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_eval_csv: cannot open " + path);
    out << "SSIM,PSNR,L1,Loss,FPS,Time,Size(MB)\n";
    out.precision(10);
    out << r.ssim << ',' << r.psnr << ',' << r.l1 << ',' << r.loss << ',' << r.fps << ','
        << r.train_time_seconds << ',' << static_cast<double>(r.size_bytes) / (1024.0 * 1024.0)
        << '\n';
}

std::string format_eval_table(const EvalReport& r) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << "SSIM    " << r.ssim << "\n"
        << "PSNR    " << r.psnr << " dB\n"
        << "L1      " << r.l1 << "\n"
        << "Loss    " << r.loss << "\n"
        << "FPS     " << r.fps << "\n"
        << "Time    " << r.train_time_seconds << " s\n"
        << "Size    " << static_cast<double>(r.size_bytes) / (1024.0 * 1024.0) << " MB\n";
    return out.str();
}

}  // namespace splat
