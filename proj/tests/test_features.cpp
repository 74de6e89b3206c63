#include "doctest.h"

#include <cmath>
#include <random>

#include "splat/features.hpp"

using namespace splat;

namespace {

// bright axis-aligned square on a dark field; its 4 corners are the
// strongest corner responses by construction
Raster square_image(int size, int lo, int hi) {
    Raster img(size, size, 1, 0.1);
    for (int y = lo; y <= hi; ++y)
        for (int x = lo; x <= hi; ++x) img.at(x, y) = 0.9;
    return img;
}

bool has_feature_near(const std::vector<Feature>& feats, double x, double y, double tol) {
    for (const auto& f : feats)
        if (std::hypot(f.x - x, f.y - y) <= tol) return true;
    return false;
}

}  // namespace

TEST_CASE("harris finds the four corners of a square") {
    Raster img = square_image(40, 12, 27);
    BinaryMask all(40, 40, true);
    auto feats = detect_features_masked(img, all, 50);
    REQUIRE(feats.size() >= 4);
    for (double cx : {12.0, 27.0})
        for (double cy : {12.0, 27.0}) CHECK(has_feature_near(feats, cx, cy, 1.5));
}

TEST_CASE("features are sorted by response and capped by max_features") {
    Raster img = square_image(40, 12, 27);
    BinaryMask all(40, 40, true);
    auto feats = detect_features_masked(img, all, 3);
    CHECK(feats.size() <= 3);
    for (size_t i = 1; i < feats.size(); ++i) CHECK(feats[i - 1].response >= feats[i].response);
}

TEST_CASE("masked detection drops corners outside the mask") {
    Raster img = square_image(40, 12, 27);
    BinaryMask left(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 20; ++x) left.set(x, y, true);
    auto feats = detect_features_masked(img, left, 50);
    for (const auto& f : feats) CHECK(f.x < 20.0);
    CHECK(has_feature_near(feats, 12, 12, 1.5));
    CHECK_FALSE(has_feature_near(feats, 27, 12, 1.5));
}

TEST_CASE("descriptors are mean-subtracted unit vectors") {
    Raster img = square_image(40, 12, 27);
    BinaryMask all(40, 40, true);
    auto feats = detect_features_masked(img, all, 10);
    REQUIRE(!feats.empty());
    for (const auto& f : feats) {
        REQUIRE(f.descriptor.size() == static_cast<size_t>(kDescriptorSize));
        double mean = 0, norm2 = 0;
        for (double v : f.descriptor) {
            mean += v;
            norm2 += v * v;
        }
        // a flat-patch fallback descriptor is a unit basis vector, not mean-free
        if (std::abs(f.descriptor[0] - 1.0) < 1e-12 && norm2 == doctest::Approx(1.0)) continue;
        CHECK(std::abs(mean) <= 1e-9 * kDescriptorSize);
        CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("matching is mutual and respects the ratio test") {
    auto make_feature = [](std::vector<double> d, double x) {
        Feature f;
        f.x = x;
        f.y = 0;
        double n = 0;
        for (double v : d) n += v * v;
        n = std::sqrt(n);
        for (double& v : d) v /= n;
        f.descriptor.assign(kDescriptorSize, 0.0);
        std::copy(d.begin(), d.end(), f.descriptor.begin());
        return f;
    };
    std::vector<Feature> a = {
        make_feature({1, 0, 0, 0}, 0),
        make_feature({0, 1, 0, 0}, 1),
        make_feature({0, 0, 1, 1}, 2),
    };
    std::vector<Feature> b = {
        make_feature({0, 1, 0, 0}, 5),      // matches a[1]
        make_feature({1, 0.02, 0, 0}, 6),   // matches a[0]
        make_feature({0, 0, 1, 0.9}, 7),    // near a[2]
        make_feature({0, 0, 0.9, 1}, 8),    // also near a[2]: ambiguous, ratio-fails
    };
    auto matches = match_features(a, b, 0.8);
    bool saw01 = false, saw10 = false, saw2 = false;
    for (const auto& m : matches) {
        if (m.index_a == 0) {
            CHECK(m.index_b == 1);
            saw01 = true;
        }
        if (m.index_a == 1) {
            CHECK(m.index_b == 0);
            saw10 = true;
        }
        if (m.index_a == 2) saw2 = true;
    }
    CHECK(saw01);
    CHECK(saw10);
    CHECK_FALSE(saw2);
}

TEST_CASE("matching two disjoint descriptor sets yields nothing") {
    Raster img_a = square_image(40, 12, 27);
    Raster flat(40, 40, 1, 0.5);
    BinaryMask all(40, 40, true);
    auto fa = detect_features_masked(img_a, all, 10);
    auto fb = detect_features_masked(flat, all, 10);
    CHECK(fb.empty());
    CHECK(match_features(fa, fb, 0.8).empty());
}
