#pragma once

#include <vector>

#include "splat/raster.hpp"

namespace splat {

inline constexpr int kPatchRadius = 5;  // 11x11 descriptor patches
inline constexpr int kDescriptorSize = (2 * kPatchRadius + 1) * (2 * kPatchRadius + 1);

struct Feature {
    double x = 0.0, y = 0.0;          // subpixel position
    double response = 0.0;            // Harris corner score
    std::vector<double> descriptor;   // unit-normalized, mean-subtracted patch
};

struct Match {
    int index_a = -1;
    int index_b = -1;
    double distance = 0.0;
};

/// Harris corners (k = 0.04, 3x3 non-max suppression, response floor
/// 1e-6 of the max) restricted to mask-true pixels, strongest first.
/// Descriptors are sampled from `descriptor_source` (normally the
/// original grayscale image) as 11x11 mean-subtracted unit patches.
std::vector<Feature> detect_features_masked(const Raster& img, const BinaryMask& mask,
                                            int max_features,
                                            const Raster* descriptor_source = nullptr);

/// Mutual nearest neighbors passing the Lowe ratio test
/// (best / second-best < ratio).
std::vector<Match> match_features(const std::vector<Feature>& a,
                                  const std::vector<Feature>& b, double ratio);

}  // namespace splat
