#include "doctest.h"

#include <random>

#include "splat/imaging.hpp"

using namespace splat;

namespace {

Raster horizontal_ramp(int w, int h) {
    Raster img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x;
    return img;
}

// Direct per-pixel cross-correlation, written independently of the
// library implementation.
double reference_tap(const Raster& img, const Kernel3x3& k, int x, int y, int c) {
    double sum = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            sum += k.at(dy, dx) * img.at_clamped(x + dx, y + dy, c);
    return sum;
}

}  // namespace

TEST_CASE("sobel on a unit-slope ramp gives Gx = 8 and Gy = 0 in the interior") {
    Raster ramp = horizontal_ramp(9, 7);
    auto [gx, gy] = sobel_gradients(ramp);
    for (int y = 0; y < 7; ++y) {
        for (int x = 1; x < 8; ++x) {
            CHECK(gx.at(x, y) == doctest::Approx(8.0).epsilon(1e-12));
            CHECK(gy.at(x, y) == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
    // replicate padding halves the ramp response at the left/right borders
    CHECK(gx.at(0, 3) == doctest::Approx(4.0));
    CHECK(gx.at(8, 3) == doctest::Approx(4.0));
}

TEST_CASE("sobel on a horizontal step edge gives flanking Gy = 4") {
    Raster step(7, 8, 1);
    for (int y = 4; y < 8; ++y)
        for (int x = 0; x < 7; ++x) step.at(x, y) = 1.0;
    auto [gx, gy] = sobel_gradients(step);
    for (int x = 1; x < 6; ++x) {
        CHECK(gy.at(x, 3) == doctest::Approx(4.0));
        CHECK(gy.at(x, 4) == doctest::Approx(4.0));
        CHECK(gy.at(x, 2) == doctest::Approx(0.0));
        CHECK(gy.at(x, 5) == doctest::Approx(0.0));
        CHECK(gx.at(x, 3) == doctest::Approx(0.0));
    }
}

TEST_CASE("identity kernel convolution is bit-exact") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    Raster img(13, 9, 3);
    for (auto& v : img.data()) v = u(rng);
    Raster out = convolve3x3(img, kIdentityKernel);
    CHECK(out.data() == img.data());
}

TEST_CASE("convolve3x3 matches a direct reference on random input") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    Kernel3x3 k;
    for (double& v : k.k) v = u(rng);
    Raster img(8, 6, 3);
    for (auto& v : img.data()) v = u(rng);
    Raster out = convolve3x3(img, k);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(out.at(x, y, c) ==
                      doctest::Approx(reference_tap(img, k, x, y, c)).epsilon(1e-12));
}

TEST_CASE("grayscale is the unweighted channel mean") {
    Raster img(2, 1, 3);
    img.at(0, 0, 0) = 0.3; img.at(0, 0, 1) = 0.6; img.at(0, 0, 2) = 0.9;
    img.at(1, 0, 0) = 1.0; img.at(1, 0, 1) = 0.0; img.at(1, 0, 2) = 0.0;
    Raster g = to_grayscale(img);
    CHECK(g.channels() == 1);
    CHECK(g.at(0, 0) == doctest::Approx(0.6));
    CHECK(g.at(1, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("attention of any constant image is all-zero") {
    for (double v : {0.0, 0.25, 1.0}) {
        Raster img(16, 16, 3, v);
        Raster a = attention_mask(img);
        for (double x : a.data()) CHECK(x == 0.0);
    }
}

TEST_CASE("attention values lie in [0,1] and reach both ends on non-constant input") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    Raster img(24, 24, 3);
    for (auto& v : img.data()) v = u(rng);
    Raster a = attention_mask(img);
    double lo = 2, hi = -1;
    for (double x : a.data()) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
}

TEST_CASE("gradient magnitude is the per-pixel hypotenuse") {
    Raster gx(2, 1, 1), gy(2, 1, 1);
    gx.at(0, 0) = 3.0; gy.at(0, 0) = 4.0;
    gx.at(1, 0) = -1.0; gy.at(1, 0) = 1.0;
    Raster m = gradient_magnitude(gx, gy);
    CHECK(m.at(0, 0) == doctest::Approx(5.0));
    CHECK(m.at(1, 0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("threshold_saliency uses >= and validates its threshold") {
    Raster sal(3, 1, 1);
    sal.at(0, 0) = 0.2; sal.at(1, 0) = 0.5; sal.at(2, 0) = 0.8;
    BinaryMask m = threshold_saliency(sal, 0.5);
    CHECK_FALSE(m.at(0, 0));
    CHECK(m.at(1, 0));
    CHECK(m.at(2, 0));
    // threshold 0 keeps everything
    CHECK(threshold_saliency(sal, 0.0).count_true() == 3);
    CHECK_THROWS_AS(threshold_saliency(sal, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(threshold_saliency(sal, 1.5), std::invalid_argument);
}

TEST_CASE("composite_white keeps masked pixels and whitens the rest") {
    Raster img(2, 2, 3, 0.4);
    BinaryMask m(2, 2);
    m.set(0, 0, true);
    Raster out = composite_white(img, m);
    for (int c = 0; c < 3; ++c) {
        CHECK(out.at(0, 0, c) == 0.4);
        CHECK(out.at(1, 0, c) == 1.0);
        CHECK(out.at(0, 1, c) == 1.0);
        CHECK(out.at(1, 1, c) == 1.0);
    }
}

TEST_CASE("classical_saliency equals attention_mask") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0, 1);
    Raster img(12, 12, 3);
    for (auto& v : img.data()) v = u(rng);
    CHECK(classical_saliency(img).data() == attention_mask(img).data());
}

TEST_CASE("enhance_features applies F + lambda A.F per channel") {
    Raster f(2, 1, 3, 0.5);
    Raster a(2, 1, 1);
    a.at(0, 0) = 1.0;
    a.at(1, 0) = 0.25;
    Raster out = enhance_features(f, a, 2.0);
    for (int c = 0; c < 3; ++c) {
        CHECK(out.at(0, 0, c) == doctest::Approx(0.5 + 2.0 * 1.0 * 0.5));
        CHECK(out.at(1, 0, c) == doctest::Approx(0.5 + 2.0 * 0.25 * 0.5));
    }
}

TEST_CASE("normalize_attention maps min to 0 and max to 1") {
    Raster g(3, 1, 1);
    g.at(0, 0) = 2.0; g.at(1, 0) = 6.0; g.at(2, 0) = 4.0;
    Raster n = normalize_attention(g);
    CHECK(n.at(0, 0) == doctest::Approx(0.0));
    CHECK(n.at(1, 0) == doctest::Approx(1.0));
    CHECK(n.at(2, 0) == doctest::Approx(0.5));
}
