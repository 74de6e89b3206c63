#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splat/camera.hpp"
#include "splat/gaussian.hpp"
#include "splat/raster.hpp"
#include "splat/reconstruct.hpp"

namespace splat {

struct ViewRecord {
    std::string image_path;
    std::optional<std::string> mask_path;
    std::optional<std::string> attention_path;
    Camera camera;
    bool has_camera = false;
    std::string split = "train";  // "train" or "eval"

    Raster image;
    std::optional<BinaryMask> mask;
    std::optional<Raster> attention;
};

struct SceneManifest {
    Camera intrinsics;  // pose fields unused
    std::vector<ViewRecord> views;
};

/// Loads a manifest JSON and decodes every referenced raster, enforcing
/// per-view dimension consistency. Paths are resolved relative to the
/// manifest location.
SceneManifest load_scene(const std::string& path);

/// Binary little-endian PLY, one vertex per splat with the 14 float
/// properties x y z f_dc_0..2 opacity scale_0..2 rot_0..3 (wxyz) —
/// the community 3DGS layout.
std::string serialize_splats(const GaussianCloud& cloud);
void save_splats(const GaussianCloud& cloud, const std::string& path);
GaussianCloud load_splats(const std::string& path);

/// ASCII PLY with x y z and uchar r g b per point.
void save_cloud_ply(const SparseCloud& cloud, const std::string& path);

/// Cameras JSON: intrinsics + wxyz quaternion + translation per camera,
/// full double precision via shortest-round-trip formatting.
void save_cameras_json(const std::vector<Camera>& cameras, const std::string& path);
std::vector<Camera> load_cameras_json(const std::string& path);

Camera camera_from_json_file(const std::string& path);  // single-camera file or first entry

}  // namespace splat
