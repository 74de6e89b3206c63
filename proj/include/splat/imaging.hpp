#pragma once

#include "splat/raster.hpp"

namespace splat {

/// Sobel kernels acting by cross-correlation (no flip).
extern const Kernel3x3 kSobelX;
extern const Kernel3x3 kSobelY;
extern const Kernel3x3 kIdentityKernel;

/// Unweighted channel mean, (r+g+b)/3.
Raster to_grayscale(const Raster& img);

/// 3x3 cross-correlation with replicate (clamp-to-edge) border padding.
Raster convolve3x3(const Raster& img, const Kernel3x3& k);

/// (G_x, G_y) from the two Sobel kernels.
std::pair<Raster, Raster> sobel_gradients(const Raster& img);

/// sqrt(gx^2 + gy^2) per pixel.
Raster gradient_magnitude(const Raster& gx, const Raster& gy);

/// Min-max normalization to [0,1]; a constant input maps to all-zero.
Raster normalize_attention(const Raster& g);

/// Full pipeline: grayscale -> Sobel -> magnitude -> normalize.
Raster attention_mask(const Raster& img);

/// bit(x,y) = sal(x,y) >= t.
BinaryMask threshold_saliency(const Raster& sal, double t);

/// Keep pixels where mask is true, white elsewhere.
Raster composite_white(const Raster& img, const BinaryMask& mask);

/// Gradient-based stand-in for a learned saliency map; identical to
/// attention_mask, kept as a named fallback for when no precomputed
/// segmentation is supplied.
Raster classical_saliency(const Raster& img);

/// F' = F + lambda * (A . F), elementwise, per channel.
Raster enhance_features(const Raster& f, const Raster& a, double lambda);

}  // namespace splat
