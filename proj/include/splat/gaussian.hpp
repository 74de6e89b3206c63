#pragma once

#include <optional>
#include <vector>

#include "splat/camera.hpp"
#include "splat/raster.hpp"
#include "splat/reconstruct.hpp"

namespace splat {

/// Constant (degree 0) spherical-harmonic basis factor; rendered color
/// is 0.5 + kShC0 * coefficient, the community 3DGS convention.
inline constexpr double kShC0 = 0.28209479177387814;

inline constexpr double kScaleMin = 1e-6;
inline constexpr double kScaleMax = 1e3;

struct Splat {
    Vec3 position = Vec3::Zero();
    Eigen::Vector4d rotation{1, 0, 0, 0};  // unit quaternion, wxyz
    Vec3 log_scale = Vec3::Zero();         // S = diag(exp(log_scale)), clamped
    double opacity_logit = 0.0;            // alpha = sigmoid(opacity_logit)
    Vec3 color = Vec3::Zero();             // degree-0 SH coefficients

    double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
    Vec3 scales() const {
        return log_scale.array().exp().cwiseMax(kScaleMin).cwiseMin(kScaleMax);
    }
    Vec3 rgb() const { return (Vec3::Constant(0.5) + kShC0 * color).cwiseMax(0.0); }
    void renormalize_rotation() { rotation.normalize(); }
};

struct GaussianCloud {
    std::vector<Splat> splats;

    size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }
};

struct RenderSettings {
    int width = 0, height = 0;
    Vec3 background = Vec3::Ones();
    double near_plane = 0.01;
    double cutoff = 3.0;                 // Mahalanobis radius of splat extent
    double alpha_floor = 1.0 / 255.0;    // minimum contributing alpha
    double transmittance_floor = 1e-4;   // early compositing stop
};

/// Rotation matrix from a (near-unit) wxyz quaternion, without
/// renormalization so gradients stay plain polynomials in q.
Mat3 rotation_matrix(const Eigen::Vector4d& q);

/// Sigma = R S S^T R^T, symmetric positive definite.
Mat3 covariance(const Eigen::Vector4d& rotation, const Vec3& log_scale);

/// Unnormalized Gaussian density exp(-1/2 x^T Sigma^-1 x), in (0,1].
double density(const Vec3& offset, const Mat3& sigma);

struct ProjectedSplat {
    Vec2 mean2d;
    Eigen::Matrix2d cov2d;  // includes the anti-aliasing floor
    double depth;
};

/// EWA-style perspective projection of one splat; nullopt when the
/// center lies behind the near plane (culled).
std::optional<ProjectedSplat> project_splat(const Splat& s, const Camera& cam,
                                            double near_plane = 0.01);

/// One isotropic splat per sparse point: scale from the mean distance to
/// the 3 nearest neighbors, identity rotation, opacity 0.1.
GaussianCloud init_from_cloud(const SparseCloud& cloud);

}  // namespace splat
