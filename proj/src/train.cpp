#include "splat/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "splat/loss.hpp"

namespace splat {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-15;
constexpr int kParamsPerSplat = 14;  // pos 0-2, rot 3-6, scale 7-9, opacity 10, color 11-13

struct AdamState {
    std::vector<std::array<double, kParamsPerSplat>> m, v;
    int64_t step = 0;

    void resize(size_t n) {
        m.assign(n, {});
        v.assign(n, {});
    }
    void filter(const std::vector<bool>& keep) {
        size_t out = 0;
        for (size_t i = 0; i < m.size(); ++i)
            if (keep[i]) {
                m[out] = m[i];
                v[out] = v[i];
                ++out;
            }
        m.resize(out);
        v.resize(out);
    }
    void append_zeros(size_t count) {
        m.resize(m.size() + count);
        v.resize(v.size() + count);
    }
};

void gather_gradient(const SplatGradients& g, size_t i, std::array<double, kParamsPerSplat>& out) {
    out[0] = g.position[i].x();
    out[1] = g.position[i].y();
    out[2] = g.position[i].z();
    for (int k = 0; k < 4; ++k) out[3 + k] = g.rotation[i](k);
    for (int k = 0; k < 3; ++k) out[7 + k] = g.log_scale[i](k);
    out[10] = g.opacity_logit[i];
    for (int k = 0; k < 3; ++k) out[11 + k] = g.color[i](k);
}

void adam_step(GaussianCloud& cloud, const SplatGradients& grads, AdamState& state,
               const TrainConfig& cfg) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    std::array<double, kParamsPerSplat> lr;
    lr[0] = lr[1] = lr[2] = cfg.lr_position;
    lr[3] = lr[4] = lr[5] = lr[6] = cfg.lr_rotation;
    lr[7] = lr[8] = lr[9] = cfg.lr_scale;
    lr[10] = cfg.lr_opacity;
    lr[11] = lr[12] = lr[13] = cfg.lr_color;

    std::array<double, kParamsPerSplat> g;
    for (size_t i = 0; i < cloud.size(); ++i) {
        gather_gradient(grads, i, g);
        auto& m = state.m[i];
        auto& v = state.v[i];
        std::array<double, kParamsPerSplat> delta;
        for (int k = 0; k < kParamsPerSplat; ++k) {
            m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
            v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
            delta[k] = lr[k] * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kAdamEps);
        }
        Splat& s = cloud.splats[i];
        s.position -= Vec3(delta[0], delta[1], delta[2]);
        for (int k = 0; k < 4; ++k) s.rotation(k) -= delta[3 + k];
        s.log_scale -= Vec3(delta[7], delta[8], delta[9]);
        s.opacity_logit -= delta[10];
        s.color -= Vec3(delta[11], delta[12], delta[13]);
        s.renormalize_rotation();
    }
}

double bilinear_sample(const Raster& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, img.width() - 1);
    int y1 = std::min(y0 + 1, img.height() - 1);
    double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * img.at(x0, y0) + fx * (1 - fy) * img.at(x1, y0) +
           (1 - fx) * fy * img.at(x0, y1) + fx * fy * img.at(x1, y1);
}

double scene_extent_of(const GaussianCloud& cloud) {
    if (cloud.empty()) return 1.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto& s : cloud.splats) centroid += s.position;
    centroid /= static_cast<double>(cloud.size());
    double r = 0.0;
    for (const auto& s : cloud.splats) r = std::max(r, (s.position - centroid).norm());
    return std::max(r, 1e-6);
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
    if (lr_position <= 0 || lr_color <= 0 || lr_opacity <= 0 || lr_scale <= 0 || lr_rotation <= 0)
        throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (ssim_weight < 0 || ssim_weight > 1)
        throw std::invalid_argument("TrainConfig: ssim_weight must lie in [0,1]");
    if (prune_attention_threshold < 0 || prune_attention_threshold > 1)
        throw std::invalid_argument("TrainConfig: prune_attention_threshold must lie in [0,1]");
    if (prune_interval < 1 || densify_interval < 1 || report_interval < 1)
        throw std::invalid_argument("TrainConfig: intervals must be >= 1");
    if (max_splats < 1) throw std::invalid_argument("TrainConfig: max_splats must be >= 1");
}

std::vector<double> attention_score_splats(const GaussianCloud& cloud,
                                           const std::vector<Camera>& cameras,
                                           const std::vector<Raster>& attn_masks,
                                           bool use_max) {
    if (cameras.size() != attn_masks.size())
        throw std::invalid_argument("attention_score_splats: cameras/masks mismatch");
    std::vector<double> scores(cloud.size(), 0.0);
    for (size_t i = 0; i < cloud.size(); ++i) {
        double sum = 0.0, peak = 0.0;
        int views = 0;
        for (size_t v = 0; v < cameras.size(); ++v) {
            auto proj = project_splat(cloud.splats[i], cameras[v]);
            if (!proj) continue;
            double a = bilinear_sample(attn_masks[v], proj->mean2d.x(), proj->mean2d.y());
            sum += a;
            peak = std::max(peak, a);
            ++views;
        }
        if (views > 0) scores[i] = use_max ? peak : sum / views;
    }
    return scores;
}

GaussianCloud attention_prune(const GaussianCloud& cloud, const std::vector<double>& scores,
                              const TrainConfig& cfg, std::vector<bool>* keep_out) {
    if (scores.size() != cloud.size())
        throw std::invalid_argument("attention_prune: scores/cloud mismatch");
    std::vector<bool> keep(cloud.size());
    GaussianCloud out;
    for (size_t i = 0; i < cloud.size(); ++i) {
        keep[i] = scores[i] >= cfg.prune_attention_threshold &&
                  cloud.splats[i].opacity() >= cfg.prune_opacity_threshold;
        if (keep[i]) out.splats.push_back(cloud.splats[i]);
    }
    if (keep_out) *keep_out = std::move(keep);
    return out;
}

GaussianCloud densify(const GaussianCloud& cloud, const std::vector<double>& mean_grads,
                      const TrainConfig& cfg, double scene_extent, size_t* added_out) {
    if (mean_grads.size() != cloud.size())
        throw std::invalid_argument("densify: gradient accumulator mismatch");
    GaussianCloud out = cloud;
    size_t added = 0;
    const double small_scale = cfg.densify_scale_threshold * scene_extent;
    for (size_t i = 0; i < cloud.size(); ++i) {
        if (out.size() + 1 > static_cast<size_t>(cfg.max_splats)) break;
        if (mean_grads[i] <= cfg.densify_grad_threshold) continue;
        const Splat& s = cloud.splats[i];
        Vec3 scales = s.scales();
        int axis;
        double s_max = scales.maxCoeff(&axis);
        if (s_max <= small_scale) {
            out.splats.push_back(s);  // clone in place
            ++added;
        } else {
            // split: shrink by 1.6 and separate along the widest principal axis
            Vec3 dir = rotation_matrix(s.rotation).col(axis);
            Splat child = s;
            child.log_scale -= Vec3::Constant(std::log(1.6));
            Splat a = child, b = child;
            a.position += 0.5 * s_max * dir;
            b.position -= 0.5 * s_max * dir;
            out.splats[i] = a;
            out.splats.push_back(b);
            ++added;
        }
    }
    if (added_out) *added_out = added;
    return out;
}

std::pair<GaussianCloud, std::vector<LossReport>> train(const TrainScene& scene,
                                                        const GaussianCloud& init,
                                                        const TrainConfig& cfg) {
    cfg.validate();
    if (scene.images.empty())
        throw std::invalid_argument("train: need at least one training view");
    if (scene.images.size() != scene.cameras.size())
        throw std::invalid_argument("train: images/cameras mismatch");
    for (const auto& img : scene.images)
        if (!img.same_dims(scene.images.front()) || img.channels() != 3)
            throw std::invalid_argument("train: inconsistent image dimensions");

    const int w = scene.images.front().width();
    const int h = scene.images.front().height();

    // attention off collapses to the identical weighted path with A = 1
    std::vector<Raster> attn;
    if (cfg.attention_enabled && !scene.attention.empty()) {
        if (scene.attention.size() != scene.images.size())
            throw std::invalid_argument("train: attention/images mismatch");
        for (const auto& a : scene.attention)
            if (a.width() != w || a.height() != h || a.channels() != 1)
                throw std::invalid_argument("train: attention dimension mismatch");
        attn = scene.attention;
    } else {
        attn.assign(scene.images.size(), Raster(w, h, 1, 1.0));
    }

    RenderSettings settings;
    settings.width = w;
    settings.height = h;
    settings.background = scene.background;

    GaussianCloud cloud = init;
    std::vector<LossReport> reports;
    if (cfg.iterations == 0) return {cloud, reports};

    AdamState adam;
    adam.resize(cloud.size());
    std::vector<double> grad_accum(cloud.size(), 0.0);
    std::vector<int> grad_count(cloud.size(), 0);
    const double extent = scene_extent_of(cloud);

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(scene.images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    size_t order_pos = order.size();  // trigger shuffle on first use

    for (int it = 0; it < cfg.iterations; ++it) {
        if (order_pos >= order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            order_pos = 0;
        }
        const int view = order[order_pos++];

        Raster rendered = rasterize(cloud, scene.cameras[view], settings);
        auto [loss, grad] = combined_loss(rendered, scene.images[view], attn[view],
                                          cfg.ssim_weight);
        if (!std::isfinite(loss))
            throw std::runtime_error("train: non-finite loss at iteration " +
                                     std::to_string(it) + " (view " + std::to_string(view) +
                                     ", " + std::to_string(cloud.size()) + " splats)");

        SplatGradients grads =
            rasterize_with_grad(cloud, scene.cameras[view], settings, grad);
        for (size_t i = 0; i < cloud.size(); ++i) {
            grad_accum[i] += grads.mean2d[i].norm();
            if (!grads.mean2d[i].isZero()) ++grad_count[i];
        }
        adam_step(cloud, grads, adam, cfg);

        const int done = it + 1;
        if (done % cfg.report_interval == 0 || done == cfg.iterations) {
            LossReport rep;
            rep.iteration = done;
            rep.weighted_l1 = weighted_l1(rendered, scene.images[view], attn[view]);
            rep.plain_l1 = 0.0;
            for (size_t i = 0; i < rendered.size(); ++i)
                rep.plain_l1 +=
                    std::abs(rendered.data()[i] - scene.images[view].data()[i]);
            rep.plain_l1 /= static_cast<double>(rendered.size());
            rep.ssim = ssim_mean(rendered, scene.images[view]);
            rep.combined = loss;
            rep.splat_count = cloud.size();
            reports.push_back(rep);
        }

        const bool final_iteration = done == cfg.iterations;
        if (done % cfg.prune_interval == 0 || final_iteration) {
            auto scores = attention_score_splats(cloud, scene.cameras, attn,
                                                 cfg.prune_attention_use_max);
            std::vector<bool> keep;
            GaussianCloud pruned = attention_prune(cloud, scores, cfg, &keep);
            if (pruned.size() != cloud.size() && !pruned.empty()) {
                cloud = std::move(pruned);
                adam.filter(keep);
                size_t out = 0;
                for (size_t i = 0; i < keep.size(); ++i)
                    if (keep[i]) {
                        grad_accum[out] = grad_accum[i];
                        grad_count[out] = grad_count[i];
                        ++out;
                    }
                grad_accum.resize(out);
                grad_count.resize(out);
            }
        }

        if (cfg.densify_enabled && done % cfg.densify_interval == 0 && !final_iteration) {
            std::vector<double> mean_grads(cloud.size(), 0.0);
            for (size_t i = 0; i < cloud.size(); ++i)
                if (grad_count[i] > 0) mean_grads[i] = grad_accum[i] / grad_count[i];
            size_t added = 0;
            cloud = densify(cloud, mean_grads, cfg, extent, &added);
            adam.append_zeros(added);
            grad_accum.assign(cloud.size(), 0.0);
            grad_count.assign(cloud.size(), 0);
        }
    }

    return {cloud, reports};
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_train_config: cannot open " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error("load_train_config: bad line " +
                                         std::to_string(lineno) + " in " + path);
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto as_d = [&] { return std::stod(value); };
        auto as_i = [&] { return std::stoi(value); };
        auto as_b = [&] { return value == "true" || value == "1" || value == "on"; };

        if (key == "iterations") cfg.iterations = as_i();
        else if (key == "lr_position") cfg.lr_position = as_d();
        else if (key == "lr_color") cfg.lr_color = as_d();
        else if (key == "lr_opacity") cfg.lr_opacity = as_d();
        else if (key == "lr_scale") cfg.lr_scale = as_d();
        else if (key == "lr_rotation") cfg.lr_rotation = as_d();
        else if (key == "ssim_weight") cfg.ssim_weight = as_d();
        else if (key == "attention_enabled") cfg.attention_enabled = as_b();
        else if (key == "prune_interval") cfg.prune_interval = as_i();
        else if (key == "prune_attention_threshold") cfg.prune_attention_threshold = as_d();
        else if (key == "prune_opacity_threshold") cfg.prune_opacity_threshold = as_d();
        else if (key == "prune_attention_use_max") cfg.prune_attention_use_max = as_b();
        else if (key == "densify_enabled") cfg.densify_enabled = as_b();
        else if (key == "densify_interval") cfg.densify_interval = as_i();
        else if (key == "densify_grad_threshold") cfg.densify_grad_threshold = as_d();
        else if (key == "densify_scale_threshold") cfg.densify_scale_threshold = as_d();
        else if (key == "max_splats") cfg.max_splats = as_i();
        else if (key == "report_interval") cfg.report_interval = as_i();
        else if (key == "seed") cfg.seed = std::stoull(value);
        else throw std::runtime_error("load_train_config: unknown key '" + key + "' in " + path);
    }
    cfg.validate();
    return cfg;
}

void save_loss_csv(const std::vector<LossReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_loss_csv: cannot open " + path);
    out << "iteration,weighted_l1,plain_l1,ssim,combined,splat_count\n";
    out.precision(17);
    for (const auto& r : reports)
        out << r.iteration << ',' << r.weighted_l1 << ',' << r.plain_l1 << ',' << r.ssim
            << ',' << r.combined << ',' << r.splat_count << '\n';
}

}  // namespace splat
