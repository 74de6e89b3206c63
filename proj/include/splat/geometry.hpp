#pragma once

#include <cstdint>
#include <vector>

#include "splat/camera.hpp"
#include "splat/features.hpp"

namespace splat {

struct VerifyResult {
    Mat3 fundamental = Mat3::Zero();  // rank 2, Frobenius norm 1
    std::vector<Match> inliers;
};

/// RANSAC + normalized 8-point fundamental estimation; inliers under
/// Sampson distance < threshold_px. Deterministic for a fixed seed.
/// Throws on fewer than 8 matches or fewer than 8 inliers.
VerifyResult verify_geometry(const std::vector<Match>& matches,
                             const std::vector<Feature>& feats_a,
                             const std::vector<Feature>& feats_b,
                             double threshold_px, uint64_t seed);

double sampson_distance(const Mat3& f, const Vec2& a, const Vec2& b);

struct Observation {
    Camera camera;
    double x = 0.0, y = 0.0;
};

/// Linear DLT triangulation over >= 2 observations. Throws on
/// degenerate geometry (parallel rays / identical centers).
Vec3 triangulate(const std::vector<Observation>& obs);

/// Relative pose of the second camera from the fundamental matrix and
/// shared intrinsics: essential decomposition with cheirality check over
/// the inlier correspondences. The first camera is the identity and the
/// returned baseline has unit norm.
struct TwoViewPose {
    Quat rotation;
    Vec3 translation;
    std::vector<int> cheirality_ok;  // indices of inliers in front of both cameras
};
TwoViewPose relative_pose_from_fundamental(const Mat3& f, const Mat3& k,
                                           const std::vector<Vec2>& pts_a,
                                           const std::vector<Vec2>& pts_b);

/// DLT camera resection from >= 6 world/pixel correspondences followed
/// by Levenberg-Marquardt refinement of the pose. Intrinsics are fixed.
Camera solve_pnp(const std::vector<Vec3>& world, const std::vector<Vec2>& pixels,
                 const Camera& intrinsics);

/// Levenberg-Marquardt refinement of an existing pose estimate.
Camera refine_pose(const Camera& initial, const std::vector<Vec3>& world,
                   const std::vector<Vec2>& pixels);

}  // namespace splat
