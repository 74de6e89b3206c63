#include "splat/loss.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splat {

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kSsimC1 = 0.01 * 0.01;  // (K1*L)^2
constexpr double kSsimC2 = 0.03 * 0.03;  // (K2*L)^2

const std::array<double, kWin * kWin>& gaussian_window() {
    static const auto win = [] {
        std::array<double, kWin * kWin> w{};
        const double sigma = 1.5;
        double sum = 0.0;
        for (int dy = -kHalf; dy <= kHalf; ++dy)
            for (int dx = -kHalf; dx <= kHalf; ++dx) {
                double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                w[(dy + kHalf) * kWin + (dx + kHalf)] = v;
                sum += v;
            }
        for (double& v : w) v /= sum;
        return w;
    }();
    return win;
}

struct SsimFields {
    // per pixel, per channel: windowed moments and the SSIM factors
    std::vector<double> mu_a, mu_b, var_a, var_b, cov_ab, lum, con;
};

SsimFields ssim_fields(const Raster& a, const Raster& b) {
    const auto& w = gaussian_window();
    const int width = a.width(), height = a.height(), ch = a.channels();
    const size_t n = a.size();
    SsimFields f;
    f.mu_a.resize(n); f.mu_b.resize(n);
    f.var_a.resize(n); f.var_b.resize(n); f.cov_ab.resize(n);
    f.lum.resize(n); f.con.resize(n);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < ch; ++c) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int dy = -kHalf; dy <= kHalf; ++dy)
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        double wt = w[(dy + kHalf) * kWin + (dx + kHalf)];
                        double va = a.at_clamped(x + dx, y + dy, c);
                        double vb = b.at_clamped(x + dx, y + dy, c);
                        ma += wt * va;
                        mb += wt * vb;
                        maa += wt * va * va;
                        mbb += wt * vb * vb;
                        mab += wt * va * vb;
                    }
                size_t i = (static_cast<size_t>(y) * width + x) * ch + c;
                f.mu_a[i] = ma;
                f.mu_b[i] = mb;
                f.var_a[i] = maa - ma * ma;
                f.var_b[i] = mbb - mb * mb;
                f.cov_ab[i] = mab - ma * mb;
                f.lum[i] = (2.0 * ma * mb + kSsimC1) / (ma * ma + mb * mb + kSsimC1);
                f.con[i] = (2.0 * f.cov_ab[i] + kSsimC2) / (f.var_a[i] + f.var_b[i] + kSsimC2);
            }
        }
    }
    return f;
}

}  // namespace

double weighted_l1(const Raster& rendered, const Raster& target, const Raster& attn) {
    if (!rendered.same_dims(target) || !rendered.same_spatial(attn) || attn.channels() != 1)
        throw std::invalid_argument("weighted_l1: dimension mismatch");
    double sum = 0.0;
    for (int y = 0; y < rendered.height(); ++y)
        for (int x = 0; x < rendered.width(); ++x) {
            double a = attn.at(x, y);
            for (int c = 0; c < rendered.channels(); ++c)
                sum += a * std::abs(target.at(x, y, c) - rendered.at(x, y, c));
        }
    return sum / static_cast<double>(rendered.size());
}

double ssim_mean(const Raster& a, const Raster& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("ssim_mean: dimension mismatch");
    SsimFields f = ssim_fields(a, b);
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += f.lum[i] * f.con[i];
    return sum / static_cast<double>(a.size());
}

Raster ssim_mean_grad(const Raster& a, const Raster& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("ssim_mean_grad: dimension mismatch");
    const auto& w = gaussian_window();
    const int width = a.width(), height = a.height(), ch = a.channels();
    SsimFields f = ssim_fields(a, b);

    Raster grad(width, height, ch);
    const double inv_n = 1.0 / static_cast<double>(a.size());

    // adjoint of the replicate-padded window filter: scatter each
    // pixel's coefficients back to the clamped tap positions
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < ch; ++c) {
                size_t i = (static_cast<size_t>(y) * width + x) * ch + c;
                double b1 = f.mu_a[i] * f.mu_a[i] + f.mu_b[i] * f.mu_b[i] + kSsimC1;
                double b2 = f.var_a[i] + f.var_b[i] + kSsimC2;
                double a1 = 2.0 * f.mu_a[i] * f.mu_b[i] + kSsimC1;
                double a2 = 2.0 * f.cov_ab[i] + kSsimC2;

                double dl_dmu = 2.0 * (f.mu_b[i] * b1 - f.mu_a[i] * a1) / (b1 * b1);
                double dc_dvar = -a2 / (b2 * b2);
                double dc_dcov = 2.0 / b2;

                double base = f.con[i] * dl_dmu +
                              f.lum[i] * dc_dvar * (-2.0 * f.mu_a[i]) +
                              f.lum[i] * dc_dcov * (-f.mu_b[i]);
                double coef_a = f.lum[i] * dc_dvar * 2.0;
                double coef_b = f.lum[i] * dc_dcov;

                for (int dy = -kHalf; dy <= kHalf; ++dy) {
                    int qy = std::clamp(y + dy, 0, height - 1);
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        int qx = std::clamp(x + dx, 0, width - 1);
                        double wt = w[(dy + kHalf) * kWin + (dx + kHalf)];
                        grad.at(qx, qy, c) +=
                            inv_n * wt *
                            (base + coef_a * a.at(qx, qy, c) + coef_b * b.at(qx, qy, c));
                    }
                }
            }
        }
    }
    return grad;
}

std::pair<double, Raster> combined_loss(const Raster& rendered, const Raster& target,
                                        const Raster& attn, double ssim_weight) {
    if (!rendered.same_dims(target) || !rendered.same_spatial(attn))
        throw std::invalid_argument("combined_loss: dimension mismatch");
    if (ssim_weight < 0.0 || ssim_weight > 1.0)
        throw std::invalid_argument("combined_loss: ssim_weight must lie in [0,1]");

    double wl1 = weighted_l1(rendered, target, attn);
    double loss = (1.0 - ssim_weight) * wl1;

    Raster grad(rendered.width(), rendered.height(), rendered.channels());
    const double scale = (1.0 - ssim_weight) / static_cast<double>(rendered.size());
    for (int y = 0; y < rendered.height(); ++y)
        for (int x = 0; x < rendered.width(); ++x) {
            double a = attn.at(x, y);
            for (int c = 0; c < rendered.channels(); ++c) {
                double diff = rendered.at(x, y, c) - target.at(x, y, c);
                double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                grad.at(x, y, c) = scale * a * sign;
            }
        }

    if (ssim_weight > 0.0) {
        loss += ssim_weight * (1.0 - ssim_mean(rendered, target));
        Raster sgrad = ssim_mean_grad(rendered, target);
        for (size_t i = 0; i < grad.size(); ++i)
            grad.data()[i] -= ssim_weight * sgrad.data()[i];
    }
    return {loss, std::move(grad)};
}

}  // namespace splat
