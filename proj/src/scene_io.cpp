#include "splat/scene_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "splat/image_io.hpp"

namespace splat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Camera camera_from_json(const json& j) {
    Camera cam;
    if (j.contains("fx")) cam.fx = j.at("fx").get<double>();
    if (j.contains("fy")) cam.fy = j.at("fy").get<double>();
    if (j.contains("cx")) cam.cx = j.at("cx").get<double>();
    if (j.contains("cy")) cam.cy = j.at("cy").get<double>();
    if (j.contains("width")) cam.width = j.at("width").get<int>();
    if (j.contains("height")) cam.height = j.at("height").get<int>();
    if (j.contains("quaternion")) {
        auto q = j.at("quaternion");
        cam.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                            q.at(2).get<double>(), q.at(3).get<double>());
        if (std::abs(cam.rotation.norm() - 1.0) > 1e-6)
            throw std::runtime_error("camera quaternion is not unit-norm");
        cam.rotation.normalize();
    }
    if (j.contains("translation")) {
        auto t = j.at("translation");
        cam.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(),
                               t.at(2).get<double>());
    }
    return cam;
}

json camera_to_json(const Camera& cam) {
    return json{{"fx", cam.fx},
                {"fy", cam.fy},
                {"cx", cam.cx},
                {"cy", cam.cy},
                {"width", cam.width},
                {"height", cam.height},
                {"quaternion", {cam.rotation.w(), cam.rotation.x(), cam.rotation.y(),
                                cam.rotation.z()}},
                {"translation", {cam.translation.x(), cam.translation.y(),
                                 cam.translation.z()}}};
}

}  // namespace

SceneManifest load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scene: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_scene: malformed JSON in " + path + ": " + e.what());
    }

    SceneManifest scene;
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    try {
        scene.intrinsics = camera_from_json(j.at("intrinsics"));
        for (const auto& jv : j.at("views")) {
            ViewRecord v;
            v.image_path = resolve(jv.at("image").get<std::string>());
            if (jv.contains("mask")) v.mask_path = resolve(jv.at("mask").get<std::string>());
            if (jv.contains("attention"))
                v.attention_path = resolve(jv.at("attention").get<std::string>());
            if (jv.contains("camera")) {
                v.camera = camera_from_json(jv.at("camera"));
                v.has_camera = true;
            }
            if (jv.contains("split")) v.split = jv.at("split").get<std::string>();
            scene.views.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("load_scene: bad manifest " + path + ": " + e.what());
    }

    for (size_t i = 0; i < scene.views.size(); ++i) {
        ViewRecord& v = scene.views[i];
        const std::string ctx = "view " + std::to_string(i) + " (" + v.image_path + ")";
        if (!fs::exists(v.image_path))
            throw std::runtime_error("load_scene: missing image for " + ctx);
        v.image = load_image(v.image_path);
        if (v.mask_path) {
            if (!fs::exists(*v.mask_path))
                throw std::runtime_error("load_scene: missing mask for " + ctx);
            v.mask = load_mask_pgm(*v.mask_path);
            if (v.mask->width() != v.image.width() || v.mask->height() != v.image.height())
                throw std::runtime_error("load_scene: mask dimension mismatch for " + ctx);
        }
        if (v.attention_path) {
            if (!fs::exists(*v.attention_path))
                throw std::runtime_error("load_scene: missing attention map for " + ctx);
            v.attention = load_image(*v.attention_path);
            if (!v.attention->same_spatial(v.image) || v.attention->channels() != 1)
                throw std::runtime_error("load_scene: attention dimension mismatch for " + ctx);
        }
    }
    return scene;
}

std::string serialize_splats(const GaussianCloud& cloud) {
    std::ostringstream out(std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
        << "property float opacity\n"
        << "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
        << "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
        << "end_header\n";
    for (const auto& s : cloud.splats) {
        float fields[14] = {
            static_cast<float>(s.position.x()), static_cast<float>(s.position.y()),
            static_cast<float>(s.position.z()), static_cast<float>(s.color.x()),
            static_cast<float>(s.color.y()),    static_cast<float>(s.color.z()),
            static_cast<float>(s.opacity_logit),
            static_cast<float>(s.log_scale.x()), static_cast<float>(s.log_scale.y()),
            static_cast<float>(s.log_scale.z()), static_cast<float>(s.rotation(0)),
            static_cast<float>(s.rotation(1)),   static_cast<float>(s.rotation(2)),
            static_cast<float>(s.rotation(3))};
        out.write(reinterpret_cast<const char*>(fields), sizeof(fields));
    }
    return out.str();
}

void save_splats(const GaussianCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_splats: cannot open " + path);
    std::string payload = serialize_splats(cloud);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

GaussianCloud load_splats(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_splats: cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != "ply")
        throw std::runtime_error("load_splats: malformed header (not a PLY) in " + path);
    if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
        throw std::runtime_error("load_splats: unsupported PLY format in " + path);

    size_t count = 0;
    std::vector<std::string> properties;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex")
                throw std::runtime_error("load_splats: unexpected element '" + name + "' in " + path);
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type != "float")
                throw std::runtime_error("load_splats: unsupported property type in " + path);
            properties.push_back(name);
        } else if (tok != "comment") {
            throw std::runtime_error("load_splats: malformed header line '" + line + "' in " + path);
        }
    }
    static const char* expected[14] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2",
                                       "opacity", "scale_0", "scale_1", "scale_2",
                                       "rot_0", "rot_1", "rot_2", "rot_3"};
    if (properties.size() != 14)
        throw std::runtime_error("load_splats: expected 14 properties, got " +
                                 std::to_string(properties.size()) + " in " + path);
    for (int i = 0; i < 14; ++i)
        if (properties[i] != expected[i])
            throw std::runtime_error("load_splats: unknown property '" + properties[i] +
                                     "' in " + path);

    GaussianCloud cloud;
    cloud.splats.resize(count);
    const size_t payload = count * 14 * sizeof(float);
    std::vector<float> buf(count * 14);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(payload));
    if (static_cast<size_t>(in.gcount()) != payload)
        throw std::runtime_error("load_splats: truncated payload in " + path + ": expected " +
                                 std::to_string(payload) + " bytes, got " +
                                 std::to_string(in.gcount()));
    for (size_t i = 0; i < count; ++i) {
        const float* f = &buf[i * 14];
        Splat& s = cloud.splats[i];
        s.position = Vec3(f[0], f[1], f[2]);
        s.color = Vec3(f[3], f[4], f[5]);
        s.opacity_logit = f[6];
        s.log_scale = Vec3(f[7], f[8], f[9]);
        s.rotation = Eigen::Vector4d(f[10], f[11], f[12], f[13]);
    }
    return cloud;
}

void save_cloud_ply(const SparseCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cloud_ply: cannot open " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "end_header\n";
    out.precision(9);
    for (size_t i = 0; i < cloud.size(); ++i) {
        auto byte = [](double v) {
            return std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
        };
        out << cloud.points[i].x() << ' ' << cloud.points[i].y() << ' '
            << cloud.points[i].z() << ' ' << byte(cloud.colors[i].x()) << ' '
            << byte(cloud.colors[i].y()) << ' ' << byte(cloud.colors[i].z()) << '\n';
    }
}

void save_cameras_json(const std::vector<Camera>& cameras, const std::string& path) {
    json j;
    j["cameras"] = json::array();
    for (const auto& cam : cameras) j["cameras"].push_back(camera_to_json(cam));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cameras_json: cannot open " + path);
    out << j.dump(2) << '\n';
}

std::vector<Camera> load_cameras_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cameras_json: cannot open " + path);
    json j;
    in >> j;
    std::vector<Camera> cams;
    for (const auto& jc : j.at("cameras")) cams.push_back(camera_from_json(jc));
    return cams;
}

Camera camera_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("camera_from_json_file: cannot open " + path);
    json j;
    in >> j;
    if (j.contains("cameras")) return camera_from_json(j.at("cameras").at(0));
    return camera_from_json(j);
}

}  // namespace splat
