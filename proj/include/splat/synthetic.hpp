#pragma once

#include <string>
#include <vector>

#include "splat/camera.hpp"
#include "splat/gaussian.hpp"

namespace splat {

/// Stands in for real capture rigs: a deterministic desk-scale scene
/// with exact silhouette masks and full ground truth on disk.
struct SyntheticSpec {
    uint64_t seed = 0;
    std::string object = "phantom";     // "phantom" (splat cloud) or "cuboid" (textured box)
    int views = 5;
    int image_size = 64;
    std::string background = "white";   // "white" or "clutter"
    double noise_level = 0.0;           // pixel-value sigma added to images
    double arc_degrees = 360.0;         // camera ring coverage
    int phantom_splats = 20;

    void validate() const;
};

SyntheticSpec load_synthetic_spec(const std::string& path);

struct SyntheticScene {
    std::vector<Raster> images;          // final images (with background applied)
    std::vector<BinaryMask> masks;       // exact object silhouettes
    std::vector<Raster> attention;       // from the white-composited images
    std::vector<Camera> cameras;
    GaussianCloud ground_truth;          // phantom only; empty for cuboid
};

/// Builds the scene in memory; deterministic for a fixed spec.
SyntheticScene generate_synthetic_scene(const SyntheticSpec& spec);

/// Materializes the scene under out_dir: images/ masks/ attention/
/// scene.json cameras.json and (phantom) gt_cloud.ply.
void generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

/// Ring camera looking at the origin; shared by the generator and tests.
Camera ring_camera(int index, int count, double arc_degrees, int image_size,
                   double radius = 4.0);

}  // namespace splat
