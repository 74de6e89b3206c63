#pragma once

#include <utility>

#include "splat/raster.hpp"

namespace splat {

/// Attention-weighted mean absolute error:
/// (1/(W*H*C)) * sum A(x,y) * |target - rendered|.
double weighted_l1(const Raster& rendered, const Raster& target, const Raster& attn);

/// Windowed SSIM core (11x11 Gaussian window, sigma 1.5, K1 0.01,
/// K2 0.03, L 1) with replicate-padded windows; works for any image
/// size. Mean over pixels and channels.
double ssim_mean(const Raster& a, const Raster& b);

/// d(ssim_mean)/d(a), analytic.
Raster ssim_mean_grad(const Raster& a, const Raster& b);

/// L = (1 - ssim_weight) * weighted_l1 + ssim_weight * (1 - SSIM),
/// returning the loss and its per-pixel gradient w.r.t. `rendered`.
std::pair<double, Raster> combined_loss(const Raster& rendered, const Raster& target,
                                        const Raster& attn, double ssim_weight);

}  // namespace splat
