#include "doctest.h"

#include <cmath>
#include <random>

#include "splat/loss.hpp"

using namespace splat;

namespace {

Raster random_raster(int w, int h, int c, std::mt19937_64& rng, double lo = 0.0,
                     double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Raster r(w, h, c);
    for (auto& v : r.data()) v = u(rng);
    return r;
}

// Independent SSIM reference: direct windowed sums with clamp-to-edge
// taps, no incremental filtering.
double ssim_reference(const Raster& a, const Raster& b) {
    constexpr int R = 5;
    constexpr double kSigma = 1.5, kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
    double w[2 * R + 1][2 * R + 1];
    double wsum = 0;
    for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) {
            w[dy + R][dx + R] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            wsum += w[dy + R][dx + R];
        }
    for (auto& row : w)
        for (auto& v : row) v /= wsum;

    double total = 0;
    size_t count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) {
                double mx = 0, my = 0;
                for (int dy = -R; dy <= R; ++dy)
                    for (int dx = -R; dx <= R; ++dx) {
                        mx += w[dy + R][dx + R] * a.at_clamped(x + dx, y + dy, c);
                        my += w[dy + R][dx + R] * b.at_clamped(x + dx, y + dy, c);
                    }
                double vx = 0, vy = 0, cov = 0;
                for (int dy = -R; dy <= R; ++dy)
                    for (int dx = -R; dx <= R; ++dx) {
                        double da = a.at_clamped(x + dx, y + dy, c) - mx;
                        double db = b.at_clamped(x + dx, y + dy, c) - my;
                        vx += w[dy + R][dx + R] * da * da;
                        vy += w[dy + R][dx + R] * db * db;
                        cov += w[dy + R][dx + R] * da * db;
                    }
                total += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                         ((mx * mx + my * my + kC1) * (vx + vy + kC2));
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("weighted_l1 matches a hand-computed example") {
    Raster a(2, 1, 3), b(2, 1, 3), w(2, 1, 1);
    for (int c = 0; c < 3; ++c) {
        a.at(0, 0, c) = 0.8; b.at(0, 0, c) = 0.5;
        a.at(1, 0, c) = 0.1; b.at(1, 0, c) = 0.2;
    }
    w.at(0, 0) = 1.0;
    w.at(1, 0) = 0.5;
    // (3 * 1.0 * 0.3 + 3 * 0.5 * 0.1) / 6
    CHECK(weighted_l1(a, b, w) == doctest::Approx(0.175));
}

TEST_CASE("weighted_l1 with uniform weights equals plain mean absolute error") {
    std::mt19937_64 rng(1);
    Raster a = random_raster(9, 7, 3, rng);
    Raster b = random_raster(9, 7, 3, rng);
    Raster ones(9, 7, 1, 1.0);
    double plain = 0;
    for (size_t i = 0; i < a.size(); ++i) plain += std::abs(a.data()[i] - b.data()[i]);
    plain /= static_cast<double>(a.size());
    CHECK(weighted_l1(a, b, ones) == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("ssim_mean matches an independent direct reference") {
    std::mt19937_64 rng(12);
    Raster a = random_raster(15, 13, 3, rng);
    Raster b = random_raster(15, 13, 3, rng, 0.1, 0.9);
    CHECK(ssim_mean(a, b) == doctest::Approx(ssim_reference(a, b)).epsilon(1e-10));
    CHECK(ssim_mean(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("combined_loss value is the declared blend") {
    std::mt19937_64 rng(21);
    Raster a = random_raster(14, 14, 3, rng);
    Raster b = random_raster(14, 14, 3, rng);
    Raster attn = random_raster(14, 14, 1, rng);
    double lambda = 0.2;
    auto [value, grad] = combined_loss(a, b, attn, lambda);
    double expected = (1.0 - lambda) * weighted_l1(a, b, attn) + lambda * (1.0 - ssim_mean(a, b));
    CHECK(value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(grad.same_dims(a));
}

TEST_CASE("combined_loss gradient matches central finite differences") {
    std::mt19937_64 rng(33);
    Raster a = random_raster(8, 8, 3, rng, 0.05, 0.95);
    Raster b = random_raster(8, 8, 3, rng, 0.05, 0.95);
    Raster attn = random_raster(8, 8, 1, rng);
    auto [value, grad] = combined_loss(a, b, attn, 0.2);
    const double h = 1e-5;
    for (size_t i = 0; i < a.size(); i += 5) {
        double save = a.data()[i];
        a.data()[i] = save + h;
        double up = combined_loss(a, b, attn, 0.2).first;
        a.data()[i] = save - h;
        double down = combined_loss(a, b, attn, 0.2).first;
        a.data()[i] = save;
        double fd = (up - down) / (2 * h);
        CHECK(grad.data()[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("l1 gradient sign convention, including ties") {
    Raster a(3, 1, 3), b(3, 1, 3), attn(3, 1, 1, 1.0);
    for (int c = 0; c < 3; ++c) {
        a.at(0, 0, c) = 0.8; b.at(0, 0, c) = 0.2;  // a > b
        a.at(1, 0, c) = 0.2; b.at(1, 0, c) = 0.8;  // a < b
        a.at(2, 0, c) = 0.5; b.at(2, 0, c) = 0.5;  // tie
    }
    auto [value, grad] = combined_loss(a, b, attn, 0.0);
    const double unit = 1.0 / static_cast<double>(a.size());
    for (int c = 0; c < 3; ++c) {
        CHECK(grad.at(0, 0, c) == doctest::Approx(unit));
        CHECK(grad.at(1, 0, c) == doctest::Approx(-unit));
        CHECK(grad.at(2, 0, c) == 0.0);
    }
}
