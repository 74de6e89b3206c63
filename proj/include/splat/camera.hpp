#pragma once

#include <Eigen/Dense>
#include <optional>

namespace splat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Pinhole camera: intrinsics plus a world-to-camera rigid transform,
/// x_cam = R * x_world + t.
struct Camera {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Quat rotation = Quat::Identity();  // world -> camera
    Vec3 translation = Vec3::Zero();

    Mat3 K() const {
        Mat3 k = Mat3::Identity();
        k(0, 0) = fx; k(1, 1) = fy;
        k(0, 2) = cx; k(1, 2) = cy;
        return k;
    }

    Vec3 to_camera(const Vec3& world) const {
        return rotation * world + translation;
    }

    Vec3 center() const {
        return rotation.conjugate() * (-translation);
    }

    /// Projects a world point; nullopt when it lies at or behind z = 0.
    std::optional<Vec2> project(const Vec3& world) const {
        Vec3 p = to_camera(world);
        if (p.z() <= 0.0) return std::nullopt;
        return Vec2(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
    }

    bool in_image(const Vec2& px) const {
        return px.x() >= 0.0 && px.x() <= width - 1 && px.y() >= 0.0 && px.y() <= height - 1;
    }
};

}  // namespace splat
