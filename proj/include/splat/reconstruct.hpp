#pragma once

#include <string>
#include <vector>

#include "splat/camera.hpp"
#include "splat/geometry.hpp"
#include "splat/raster.hpp"

namespace splat {

struct TrackObservation {
    int view = -1;
    int feature = -1;
};

struct SparseCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> colors;                          // RGB in [0,1]
    std::vector<std::vector<TrackObservation>> tracks; // >= 2 observations each

    size_t size() const { return points.size(); }
};

struct SfmConfig {
    int max_features = 2000;
    double match_ratio = 0.8;
    double ransac_threshold_px = 1.0;
    double outlier_threshold_px = 2.0;
    double min_triangulation_angle_deg = 2.0;
    double mask_support_fraction = 1.0;
    bool descriptors_from_original = true;  // else from the white-composited image
    uint64_t seed = 0;
};

struct SfmResult {
    SparseCloud cloud;
    std::vector<Camera> cameras;        // aligned with input views
    std::vector<bool> registered;       // per view
    std::vector<std::string> warnings;
    double mean_reprojection_error = 0.0;
};

/// Masked feature pipeline -> pairwise verified matching -> two-view
/// initialization -> incremental registration / triangulation / outlier
/// filtering -> global bundle adjustment. The gauge is fixed to the
/// initial pair: first camera at identity, unit baseline.
SfmResult incremental_reconstruct(const std::vector<Raster>& images,
                                  const std::vector<BinaryMask>& masks,
                                  const Camera& intrinsics, const SfmConfig& config);

/// Keeps a point iff it projects inside the mask in at least
/// ceil(fraction * observing views) of the views observing it.
SparseCloud filter_background_points(const SparseCloud& cloud,
                                     const std::vector<Camera>& cameras,
                                     const std::vector<BinaryMask>& masks,
                                     double fraction = 1.0);

/// Mean reprojection error in pixels over all track observations whose
/// view is registered.
double mean_reprojection_error(const SparseCloud& cloud, const std::vector<Camera>& cameras,
                               const std::vector<std::vector<Feature>>& features);

}  // namespace splat
