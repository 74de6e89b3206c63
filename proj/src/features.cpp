#include "splat/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "splat/imaging.hpp"

namespace splat {

namespace {

constexpr double kHarrisK = 0.04;
constexpr double kResponseFloor = 1e-6;

// Fits a 1D parabola through (r_minus, r_center, r_plus) and returns the
// subpixel offset of the peak in [-0.5, 0.5].
double parabolic_offset(double rm, double rc, double rp) {
    double denom = rm - 2.0 * rc + rp;
    if (std::abs(denom) < 1e-18) return 0.0;
    double off = 0.5 * (rm - rp) / denom;
    return std::clamp(off, -0.5, 0.5);
}

std::vector<double> sample_descriptor(const Raster& img, int cx, int cy) {
    std::vector<double> d(kDescriptorSize);
    double mean = 0.0;
    int i = 0;
    for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy)
        for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
            d[i] = img.at_clamped(cx + dx, cy + dy);
            mean += d[i];
            ++i;
        }
    mean /= kDescriptorSize;
    double norm2 = 0.0;
    for (double& v : d) {
        v -= mean;
        norm2 += v * v;
    }
    double norm = std::sqrt(norm2);
    if (norm < 1e-12) {
        // flat patch: fall back to a fixed unit vector so the invariant holds
        std::fill(d.begin(), d.end(), 0.0);
        d[0] = 1.0;
        return d;
    }
    for (double& v : d) v /= norm;
    return d;
}

}  // namespace

std::vector<Feature> detect_features_masked(const Raster& img, const BinaryMask& mask,
                                            int max_features,
                                            const Raster* descriptor_source) {
    if (img.channels() != 1)
        throw std::invalid_argument("detect_features_masked: input must be grayscale");
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("detect_features_masked: mask dimension mismatch");
    const Raster& desc_img = descriptor_source ? *descriptor_source : img;
    if (!desc_img.same_spatial(img) || desc_img.channels() != 1)
        throw std::invalid_argument("detect_features_masked: descriptor source mismatch");

    const int w = img.width(), h = img.height();
    auto [gx, gy] = sobel_gradients(img);

    // Structure tensor smoothed with a 3x3 box; Harris response per pixel.
    Raster response(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sxx = 0, syy = 0, sxy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    double ix = gx.at_clamped(x + dx, y + dy);
                    double iy = gy.at_clamped(x + dx, y + dy);
                    sxx += ix * ix;
                    syy += iy * iy;
                    sxy += ix * iy;
                }
            double det = sxx * syy - sxy * sxy;
            double tr = sxx + syy;
            response.at(x, y) = det - kHarrisK * tr * tr;
        }
    }

    double max_resp = 0.0;
    for (double v : response.data()) max_resp = std::max(max_resp, v);
    const double floor = kResponseFloor * max_resp;

    std::vector<Feature> feats;
    const int margin = 1;
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            if (!mask.at(x, y)) continue;
            double r = response.at(x, y);
            if (r <= floor || r <= 0.0) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (response.at(x + dx, y + dy) > r) { is_max = false; break; }
                }
            if (!is_max) continue;

            Feature f;
            f.x = x + parabolic_offset(response.at(x - 1, y), r, response.at(x + 1, y));
            f.y = y + parabolic_offset(response.at(x, y - 1), r, response.at(x, y + 1));
            f.response = r;
            f.descriptor = sample_descriptor(desc_img, x, y);
            feats.push_back(std::move(f));
        }
    }

    std::sort(feats.begin(), feats.end(),
              [](const Feature& a, const Feature& b) { return a.response > b.response; });
    if (max_features >= 0 && static_cast<int>(feats.size()) > max_features)
        feats.resize(max_features);
    return feats;
}

std::vector<Match> match_features(const std::vector<Feature>& a,
                                  const std::vector<Feature>& b, double ratio) {
    if (ratio <= 0.0 || ratio > 1.0)
        throw std::invalid_argument("match_features: ratio must lie in (0,1]");

    auto dist2 = [](const Feature& f, const Feature& g) {
        double s = 0.0;
        for (int i = 0; i < kDescriptorSize; ++i) {
            double d = f.descriptor[i] - g.descriptor[i];
            s += d * d;
        }
        return s;
    };

    // forward pass with ratio test
    std::vector<int> best_in_b(a.size(), -1);
    std::vector<double> best_d2(a.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        int j1 = -1;
        for (size_t j = 0; j < b.size(); ++j) {
            double d = dist2(a[i], b[j]);
            if (d < d1) { d2 = d1; d1 = d; j1 = static_cast<int>(j); }
            else if (d < d2) { d2 = d; }
        }
        if (j1 < 0) continue;
        if (b.size() >= 2 && !(std::sqrt(d1) < ratio * std::sqrt(d2))) continue;
        best_in_b[i] = j1;
        best_d2[i] = d1;
    }

    // mutual check
    std::vector<Match> out;
    for (size_t i = 0; i < a.size(); ++i) {
        int j = best_in_b[i];
        if (j < 0) continue;
        double d_ij = best_d2[i];
        bool mutual = true;
        for (size_t k = 0; k < a.size(); ++k) {
            if (k == i) continue;
            if (dist2(a[k], b[j]) < d_ij) { mutual = false; break; }
        }
        if (!mutual) continue;
        out.push_back({static_cast<int>(i), j, std::sqrt(d_ij)});
    }
    return out;
}

}  // namespace splat
