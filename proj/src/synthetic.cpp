#include "splat/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "splat/image_io.hpp"
#include "splat/imaging.hpp"
#include "splat/rasterizer.hpp"
#include "splat/scene_io.hpp"

namespace splat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic [0,1) value for an integer lattice cell.
double cell_hash(uint64_t seed, int64_t ix, int64_t iy, int64_t iz, uint64_t salt) {
    uint64_t h = seed;
    h = splitmix64(h ^ static_cast<uint64_t>(ix) * 0x100000001b3ULL);
    h = splitmix64(h ^ static_cast<uint64_t>(iy) * 0x1000193ULL);
    h = splitmix64(h ^ static_cast<uint64_t>(iz) * 0x10001ULL);
    h = splitmix64(h ^ salt);
    return static_cast<double>(h >> 11) / 9007199254740992.0;
}

Vec3 cell_color(uint64_t seed, const Vec3& p, double freq, uint64_t salt) {
    int64_t ix = static_cast<int64_t>(std::floor(p.x() * freq));
    int64_t iy = static_cast<int64_t>(std::floor(p.y() * freq));
    int64_t iz = static_cast<int64_t>(std::floor(p.z() * freq));
    return Vec3(cell_hash(seed, ix, iy, iz, salt),
                cell_hash(seed, ix, iy, iz, salt + 1),
                cell_hash(seed, ix, iy, iz, salt + 2));
}

// Blocky multi-scale surface texture with strong corner structure.
Vec3 box_texture(uint64_t seed, const Vec3& p) {
    Vec3 coarse = cell_color(seed, p, 8.0, 11);
    double fine = cell_hash(seed, static_cast<int64_t>(std::floor(p.x() * 16.0)),
                            static_cast<int64_t>(std::floor(p.y() * 16.0)),
                            static_cast<int64_t>(std::floor(p.z() * 16.0)), 29);
    return (0.15 + 0.6 * coarse.array() + 0.2 * fine).cwiseMin(1.0).matrix();
}

const Vec3 kBoxHalfExtents(0.65, 0.5, 0.4);
// Protruding step on the front face. Corners then span two depth
// planes, which keeps two-view geometry away from the single-plane
// degeneracy of the eight-point algorithm.
const Vec3 kStepCenter(0.12, 0.08, 0.52);
const Vec3 kStepHalfExtents(0.3, 0.24, 0.22);

double intersect_aabb(const Vec3& origin, const Vec3& dir, const Vec3& center,
                      const Vec3& half) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        double rel = origin(a) - center(a);
        if (std::abs(dir(a)) < 1e-12) {
            if (std::abs(rel) > half(a)) return -1.0;
            continue;
        }
        double ta = (-half(a) - rel) / dir(a);
        double tb = (half(a) - rel) / dir(a);
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return -1.0;
    }
    return t0 > 1e-9 ? t0 : -1.0;
}

// Nearest hit against the ground-truth object (main box plus step).
double intersect_box(const Vec3& origin, const Vec3& dir) {
    double ta = intersect_aabb(origin, dir, Vec3::Zero(), kBoxHalfExtents);
    double tb = intersect_aabb(origin, dir, kStepCenter, kStepHalfExtents);
    if (ta < 0.0) return tb;
    if (tb < 0.0) return ta;
    return std::min(ta, tb);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (views < 2) throw std::invalid_argument("SyntheticSpec: view count must be >= 2");
    if (image_size < 32) throw std::invalid_argument("SyntheticSpec: image size must be >= 32");
    if (object != "phantom" && object != "cuboid")
        throw std::invalid_argument("SyntheticSpec: object must be 'phantom' or 'cuboid'");
    if (background != "white" && background != "clutter")
        throw std::invalid_argument("SyntheticSpec: background must be 'white' or 'clutter'");
    if (noise_level < 0) throw std::invalid_argument("SyntheticSpec: noise level must be >= 0");
    if (phantom_splats < 1)
        throw std::invalid_argument("SyntheticSpec: phantom_splats must be >= 1");
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_synthetic_spec: cannot open " + path);
    json j;
    in >> j;
    SyntheticSpec spec;
    if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
    if (j.contains("object")) spec.object = j.at("object").get<std::string>();
    if (j.contains("views")) spec.views = j.at("views").get<int>();
    if (j.contains("image_size")) spec.image_size = j.at("image_size").get<int>();
    if (j.contains("background")) spec.background = j.at("background").get<std::string>();
    if (j.contains("noise_level")) spec.noise_level = j.at("noise_level").get<double>();
    if (j.contains("arc_degrees")) spec.arc_degrees = j.at("arc_degrees").get<double>();
    if (j.contains("phantom_splats")) spec.phantom_splats = j.at("phantom_splats").get<int>();
    spec.validate();
    return spec;
}

Camera ring_camera(int index, int count, double arc_degrees, int image_size, double radius) {
    double theta;
    if (arc_degrees >= 360.0) {
        theta = 2.0 * M_PI * index / count;
    } else {
        // partial arcs are centered on theta = 0
        double step = arc_degrees * M_PI / 180.0 / std::max(1, count - 1);
        theta = (index - 0.5 * (count - 1)) * step;
    }
    double phi = 0.28 + 0.06 * (index % 2);  // alternate elevation, avoids coplanar rigs

    Vec3 center = radius * Vec3(std::sin(theta) * std::cos(phi), std::sin(phi),
                                std::cos(theta) * std::cos(phi));
    Vec3 forward = (-center).normalized();                   // look at the origin
    Vec3 right = forward.cross(Vec3(0, 1, 0)).normalized();  // camera y points down
    Vec3 down = forward.cross(right).normalized();

    Mat3 r;
    r.row(0) = right;
    r.row(1) = down;
    r.row(2) = forward;

    Camera cam;
    cam.fx = cam.fy = 1.2 * image_size;
    cam.cx = cam.cy = 0.5 * (image_size - 1);
    cam.width = cam.height = image_size;
    cam.rotation = Quat(r).normalized();
    cam.translation = -(cam.rotation * center);
    return cam;
}

SyntheticScene generate_synthetic_scene(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticScene scene;

    for (int v = 0; v < spec.views; ++v)
        scene.cameras.push_back(ring_camera(v, spec.views, spec.arc_degrees, spec.image_size));

    if (spec.object == "phantom") {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < spec.phantom_splats; ++i) {
            Splat s;
            Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
            dir.normalize();
            s.position = dir * 0.8 * std::cbrt(uni(rng));
            s.log_scale = Vec3(std::log(0.08 + 0.17 * uni(rng)),
                               std::log(0.08 + 0.17 * uni(rng)),
                               std::log(0.08 + 0.17 * uni(rng)));
            Eigen::Vector4d q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
            s.rotation = q.normalized();
            double alpha = 0.7 + 0.25 * uni(rng);
            s.opacity_logit = std::log(alpha / (1.0 - alpha));
            Vec3 rgb(0.05 + 0.9 * uni(rng), 0.05 + 0.9 * uni(rng), 0.05 + 0.9 * uni(rng));
            s.color = (rgb - Vec3::Constant(0.5)) / kShC0;
            scene.ground_truth.splats.push_back(s);
        }

        // round every parameter through float32 so the PLY on disk
        // reproduces this cloud exactly; the volatile store blocks the
        // -O3 vectorizer, which otherwise elides the paired narrowing
        // and widening conversions
        auto to_f32 = [](double v) {
            volatile float f = static_cast<float>(v);
            return static_cast<double>(f);
        };
        for (Splat& s : scene.ground_truth.splats) {
            for (int k = 0; k < 3; ++k) {
                s.position(k) = to_f32(s.position(k));
                s.log_scale(k) = to_f32(s.log_scale(k));
                s.color(k) = to_f32(s.color(k));
            }
            for (int k = 0; k < 4; ++k) s.rotation(k) = to_f32(s.rotation(k));
            s.opacity_logit = to_f32(s.opacity_logit);
        }

        RenderSettings settings;
        settings.width = settings.height = spec.image_size;
        for (int v = 0; v < spec.views; ++v) {
            Raster alpha;
            Raster img = rasterize_with_alpha(scene.ground_truth, scene.cameras[v],
                                              settings, &alpha);
            BinaryMask mask(spec.image_size, spec.image_size);
            for (int y = 0; y < spec.image_size; ++y)
                for (int x = 0; x < spec.image_size; ++x)
                    mask.set(x, y, alpha.at(x, y) > 0.0);
            scene.images.push_back(std::move(img));
            scene.masks.push_back(std::move(mask));
        }
    } else {  // cuboid
        for (int v = 0; v < spec.views; ++v) {
            const Camera& cam = scene.cameras[v];
            Mat3 r_wc = cam.rotation.toRotationMatrix().transpose();
            Vec3 origin = cam.center();
            Raster img(spec.image_size, spec.image_size, 3, 1.0);
            BinaryMask mask(spec.image_size, spec.image_size);
            for (int y = 0; y < spec.image_size; ++y) {
                for (int x = 0; x < spec.image_size; ++x) {
                    Vec3 dir_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
                    Vec3 dir = (r_wc * dir_cam).normalized();
                    double t = intersect_box(origin, dir);
                    if (t > 0.0) {
                        Vec3 hit = origin + t * dir;
                        Vec3 c = box_texture(spec.seed, hit);
                        img.at(x, y, 0) = c.x();
                        img.at(x, y, 1) = c.y();
                        img.at(x, y, 2) = c.z();
                        mask.set(x, y, true);
                    }
                }
            }
            scene.images.push_back(std::move(img));
            scene.masks.push_back(std::move(mask));
        }
    }

    // clutter backgrounds: geometry-consistent textured plane behind the object
    if (spec.background == "clutter") {
        const double plane_z = -2.0;
        for (int v = 0; v < spec.views; ++v) {
            const Camera& cam = scene.cameras[v];
            Mat3 r_wc = cam.rotation.toRotationMatrix().transpose();
            Vec3 origin = cam.center();
            for (int y = 0; y < spec.image_size; ++y) {
                for (int x = 0; x < spec.image_size; ++x) {
                    if (scene.masks[v].at(x, y)) continue;
                    Vec3 dir_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
                    Vec3 dir = (r_wc * dir_cam).normalized();
                    Vec3 c(0.9, 0.9, 0.9);
                    if (std::abs(dir.z()) > 1e-9) {
                        double t = (plane_z - origin.z()) / dir.z();
                        if (t > 0.0) {
                            Vec3 hit = origin + t * dir;
                            c = 0.2 + 0.7 * cell_color(spec.seed, hit, 3.0, 97).array();
                        }
                    }
                    scene.images[v].at(x, y, 0) = c.x();
                    scene.images[v].at(x, y, 1) = c.y();
                    scene.images[v].at(x, y, 2) = c.z();
                }
            }
        }
    }

    if (spec.noise_level > 0.0) {
        std::mt19937_64 rng(splitmix64(spec.seed ^ 0xA5A5A5A5ULL));
        std::normal_distribution<double> noise(0.0, spec.noise_level);
        for (auto& img : scene.images)
            for (double& p : img.data()) p = std::clamp(p + noise(rng), 0.0, 1.0);
    }

    // attention from the white-composited images, keeping background
    // clutter out of the weighting
    for (int v = 0; v < spec.views; ++v)
        scene.attention.push_back(
            attention_mask(composite_white(scene.images[v], scene.masks[v])));

    return scene;
}

void generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    SyntheticScene scene = generate_synthetic_scene(spec);

    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");
    fs::create_directories(fs::path(out_dir) / "attention");

    json manifest;
    manifest["intrinsics"] = {{"fx", scene.cameras[0].fx},   {"fy", scene.cameras[0].fy},
                              {"cx", scene.cameras[0].cx},   {"cy", scene.cameras[0].cy},
                              {"width", scene.cameras[0].width},
                              {"height", scene.cameras[0].height}};
    manifest["views"] = json::array();

    char name[64];
    for (int v = 0; v < spec.views; ++v) {
        std::snprintf(name, sizeof(name), "view_%03d", v);
        std::string img_rel = std::string("images/") + name + ".png";
        std::string mask_rel = std::string("masks/") + name + ".pgm";
        std::string attn_rel = std::string("attention/") + name + ".pfm";
        save_png(scene.images[v], (fs::path(out_dir) / img_rel).string());
        // lossless copy for exact self-render fixtures
        save_pfm(scene.images[v],
                 (fs::path(out_dir) / "images" / (std::string(name) + ".pfm")).string());
        save_mask_pgm(scene.masks[v], (fs::path(out_dir) / mask_rel).string());
        save_pfm(scene.attention[v], (fs::path(out_dir) / attn_rel).string());
        save_pnm(scene.attention[v],
                 (fs::path(out_dir) / "attention" / (std::string(name) + ".pgm")).string());

        json jv;
        jv["image"] = img_rel;
        jv["mask"] = mask_rel;
        jv["attention"] = attn_rel;
        const Camera& cam = scene.cameras[v];
        jv["camera"] = {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
                        {"width", cam.width}, {"height", cam.height},
                        {"quaternion", {cam.rotation.w(), cam.rotation.x(),
                                        cam.rotation.y(), cam.rotation.z()}},
                        {"translation", {cam.translation.x(), cam.translation.y(),
                                         cam.translation.z()}}};
        jv["split"] = v == spec.views - 1 ? "eval" : "train";
        manifest["views"].push_back(jv);
    }

    std::ofstream mout(fs::path(out_dir) / "scene.json");
    mout << manifest.dump(2) << '\n';
    save_cameras_json(scene.cameras, (fs::path(out_dir) / "cameras.json").string());
    if (!scene.ground_truth.empty())
        save_splats(scene.ground_truth, (fs::path(out_dir) / "gt_cloud.ply").string());
}

}  // namespace splat
