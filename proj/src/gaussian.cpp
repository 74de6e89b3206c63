#include "splat/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splat {

Mat3 rotation_matrix(const Eigen::Vector4d& q) {
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y);
    return r;
}

Mat3 covariance(const Eigen::Vector4d& rotation, const Vec3& log_scale) {
    Mat3 r = rotation_matrix(rotation);
    Vec3 s = log_scale.array().exp().cwiseMax(kScaleMin).cwiseMin(kScaleMax);
    Mat3 m = r * s.asDiagonal();
    return m * m.transpose();
}

double density(const Vec3& offset, const Mat3& sigma) {
    Eigen::LLT<Mat3> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("density: covariance is not positive definite");
    double mahal2 = offset.dot(llt.solve(offset));
    return std::exp(-0.5 * mahal2);
}

std::optional<ProjectedSplat> project_splat(const Splat& s, const Camera& cam,
                                            double near_plane) {
    Vec3 m = cam.to_camera(s.position);
    if (m.z() < near_plane) return std::nullopt;

    const double z = m.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / z, 0.0, -cam.fx * m.x() / (z * z),
           0.0, cam.fy / z, -cam.fy * m.y() / (z * z);

    Mat3 w = cam.rotation.toRotationMatrix();
    Mat3 sigma = covariance(s.rotation, s.log_scale);
    Eigen::Matrix<double, 2, 3> u = jac * w;

    ProjectedSplat out;
    out.mean2d = Vec2(cam.fx * m.x() / z + cam.cx, cam.fy * m.y() / z + cam.cy);
    out.cov2d = u * sigma * u.transpose() + 0.3 * Eigen::Matrix2d::Identity();
    out.depth = z;
    return out;
}

GaussianCloud init_from_cloud(const SparseCloud& cloud) {
    if (cloud.points.empty())
        throw std::invalid_argument("init_from_cloud: empty sparse cloud");

    const size_t n = cloud.points.size();
    GaussianCloud gc;
    gc.splats.resize(n);
    const double opacity_logit = std::log(0.1 / 0.9);

    for (size_t i = 0; i < n; ++i) {
        Splat& s = gc.splats[i];
        s.position = cloud.points[i];
        s.color = (cloud.colors[i] - Vec3::Constant(0.5)) / kShC0;
        s.opacity_logit = opacity_logit;

        double scale;
        if (n < 2) {
            scale = 0.01;  // no neighbors to measure
        } else {
            std::vector<double> d2;
            d2.reserve(n - 1);
            for (size_t j = 0; j < n; ++j)
                if (j != i) d2.push_back((cloud.points[j] - cloud.points[i]).squaredNorm());
            size_t k = std::min<size_t>(3, d2.size());
            std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
            double mean = 0.0;
            for (size_t j = 0; j < k; ++j) mean += std::sqrt(d2[j]);
            scale = std::max(mean / static_cast<double>(k), 1e-7);
        }
        double ls = std::clamp(std::log(scale), std::log(kScaleMin), std::log(kScaleMax));
        s.log_scale = Vec3::Constant(ls);
    }
    return gc;
}

}  // namespace splat
