#pragma once

#include "splat/gaussian.hpp"

namespace splat {

/// Front-to-back alpha compositing of depth-sorted projected splats
/// over the background color.
Raster rasterize(const GaussianCloud& cloud, const Camera& cam,
                 const RenderSettings& settings);

/// Same compositing pass, additionally returning the per-pixel
/// accumulated object alpha (1 - final transmittance) — used for exact
/// silhouette masks of synthetic scenes.
Raster rasterize_with_alpha(const GaussianCloud& cloud, const Camera& cam,
                            const RenderSettings& settings, Raster* alpha_out);

/// dL/d(parameter) for every splat, given dL/d(rendered pixel).
struct SplatGradients {
    std::vector<Vec3> position;
    std::vector<Eigen::Vector4d> rotation;
    std::vector<Vec3> log_scale;
    std::vector<double> opacity_logit;
    std::vector<Vec3> color;
    std::vector<Vec2> mean2d;  // view-space positional gradient, drives densification

    void resize(size_t n);
    void setZero();
};

/// Analytic gradients by chain rule through compositing, the 2D Gaussian
/// evaluation, the projection Jacobian, and the covariance construction.
/// Culled splats get zero gradients.
SplatGradients rasterize_with_grad(const GaussianCloud& cloud, const Camera& cam,
                                   const RenderSettings& settings, const Raster& loss_grad);

}  // namespace splat
