#include "splat/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splat {

const Kernel3x3 kSobelX = {{-1, 0, 1,
                            -2, 0, 2,
                            -1, 0, 1}};
const Kernel3x3 kSobelY = {{-1, -2, -1,
                             0,  0,  0,
                             1,  2,  1}};
const Kernel3x3 kIdentityKernel = {{0, 0, 0,
                                    0, 1, 0,
                                    0, 0, 0}};

Raster to_grayscale(const Raster& img) {
    if (img.channels() != 3)
        throw std::invalid_argument("to_grayscale: input must have 3 channels");
    Raster out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(x, y) = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
    return out;
}

Raster convolve3x3(const Raster& img, const Kernel3x3& k) {
    Raster out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        acc += k.at(dy, dx) * img.at_clamped(x + dx, y + dy, c);
                out.at(x, y, c) = acc;
            }
        }
    }
    return out;
}

std::pair<Raster, Raster> sobel_gradients(const Raster& img) {
    if (img.channels() != 1)
        throw std::invalid_argument("sobel_gradients: input must be grayscale");
    return {convolve3x3(img, kSobelX), convolve3x3(img, kSobelY)};
}

Raster gradient_magnitude(const Raster& gx, const Raster& gy) {
    if (!gx.same_dims(gy))
        throw std::invalid_argument("gradient_magnitude: dimension mismatch");
    Raster out(gx.width(), gx.height(), 1);
    for (size_t i = 0; i < gx.size(); ++i)
        out.data()[i] = std::hypot(gx.data()[i], gy.data()[i]);
    return out;
}

Raster normalize_attention(const Raster& g) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : g.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Raster out(g.width(), g.height(), g.channels());
    if (hi <= lo) return out;  // featureless view, uniform zero emphasis
    const double inv = 1.0 / (hi - lo);
    for (size_t i = 0; i < g.size(); ++i)
        out.data()[i] = (g.data()[i] - lo) * inv;
    return out;
}

Raster attention_mask(const Raster& img) {
    auto [gx, gy] = sobel_gradients(to_grayscale(img));
    return normalize_attention(gradient_magnitude(gx, gy));
}

BinaryMask threshold_saliency(const Raster& sal, double t) {
    if (t < 0.0 || t > 1.0)
        throw std::invalid_argument("threshold_saliency: threshold must lie in [0,1]");
    BinaryMask m(sal.width(), sal.height());
    for (int y = 0; y < sal.height(); ++y)
        for (int x = 0; x < sal.width(); ++x)
            m.set(x, y, sal.at(x, y) >= t);
    return m;
}

Raster composite_white(const Raster& img, const BinaryMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("composite_white: dimension mismatch");
    Raster out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (!mask.at(x, y))
                for (int c = 0; c < img.channels(); ++c)
                    out.at(x, y, c) = 1.0;
    return out;
}

Raster classical_saliency(const Raster& img) {
    return attention_mask(img);
}

Raster enhance_features(const Raster& f, const Raster& a, double lambda) {
    if (!f.same_spatial(a) || a.channels() != 1)
        throw std::invalid_argument("enhance_features: dimension mismatch");
    if (lambda < 0.0)
        throw std::invalid_argument("enhance_features: lambda must be >= 0");
    Raster out = f;
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < f.channels(); ++c)
                out.at(x, y, c) = f.at(x, y, c) + lambda * a.at(x, y) * f.at(x, y, c);
    return out;
}

}  // namespace splat
