#include "splat/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace splat {

namespace {

struct VisibleSplat {
    int index;
    ProjectedSplat proj;
    Eigen::Matrix2d conic;  // cov2d^-1
    double alpha;
    Vec3 rgb;
};

std::vector<VisibleSplat> project_and_sort(const GaussianCloud& cloud, const Camera& cam,
                                           const RenderSettings& settings) {
    std::vector<VisibleSplat> vis;
    vis.reserve(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
        auto proj = project_splat(cloud.splats[i], cam, settings.near_plane);
        if (!proj) continue;
        VisibleSplat v;
        v.index = static_cast<int>(i);
        v.proj = *proj;
        v.conic = proj->cov2d.inverse();
        v.alpha = cloud.splats[i].opacity();
        v.rgb = cloud.splats[i].rgb();
        vis.push_back(std::move(v));
    }
    // global front-to-back sort by center depth, index as a deterministic tie-break
    std::sort(vis.begin(), vis.end(), [](const VisibleSplat& a, const VisibleSplat& b) {
        if (a.proj.depth != b.proj.depth) return a.proj.depth < b.proj.depth;
        return a.index < b.index;
    });
    return vis;
}

// Zero render dimensions mean "use the camera's".
RenderSettings resolve_dims(const RenderSettings& in, const Camera& cam) {
    RenderSettings out = in;
    if (out.width == 0 && out.height == 0) {
        out.width = cam.width;
        out.height = cam.height;
    }
    if (out.width < 1 || out.height < 1)
        throw std::invalid_argument("rasterize: invalid render dimensions");
    return out;
}

}  // namespace

Raster rasterize_with_alpha(const GaussianCloud& cloud, const Camera& cam,
                            const RenderSettings& settings_in, Raster* alpha_out) {
    const RenderSettings settings = resolve_dims(settings_in, cam);
    auto vis = project_and_sort(cloud, cam, settings);

    const double cutoff2 = settings.cutoff * settings.cutoff;
    Raster img(settings.width, settings.height, 3);
    if (alpha_out) *alpha_out = Raster(settings.width, settings.height, 1);

    for (int py = 0; py < settings.height; ++py) {
        for (int px = 0; px < settings.width; ++px) {
            Vec3 acc = Vec3::Zero();
            double trans = 1.0;
            for (const auto& v : vis) {
                Vec2 d(px - v.proj.mean2d.x(), py - v.proj.mean2d.y());
                double mahal2 = d.dot(v.conic * d);
                if (mahal2 > cutoff2) continue;
                double alpha = v.alpha * std::exp(-0.5 * mahal2);
                if (alpha < settings.alpha_floor) continue;
                acc += v.rgb * (alpha * trans);
                trans *= 1.0 - alpha;
                if (trans < settings.transmittance_floor) break;
            }
            acc += trans * settings.background;
            img.at(px, py, 0) = acc.x();
            img.at(px, py, 1) = acc.y();
            img.at(px, py, 2) = acc.z();
            if (alpha_out) alpha_out->at(px, py) = 1.0 - trans;
        }
    }
    return img;
}

Raster rasterize(const GaussianCloud& cloud, const Camera& cam,
                 const RenderSettings& settings) {
    return rasterize_with_alpha(cloud, cam, settings, nullptr);
}

void SplatGradients::resize(size_t n) {
    position.resize(n);
    rotation.resize(n);
    log_scale.resize(n);
    opacity_logit.resize(n);
    color.resize(n);
    mean2d.resize(n);
    setZero();
}

void SplatGradients::setZero() {
    std::fill(position.begin(), position.end(), Vec3::Zero());
    std::fill(rotation.begin(), rotation.end(), Eigen::Vector4d::Zero());
    std::fill(log_scale.begin(), log_scale.end(), Vec3::Zero());
    std::fill(opacity_logit.begin(), opacity_logit.end(), 0.0);
    std::fill(color.begin(), color.end(), Vec3::Zero());
    std::fill(mean2d.begin(), mean2d.end(), Vec2::Zero());
}

SplatGradients rasterize_with_grad(const GaussianCloud& cloud, const Camera& cam,
                                   const RenderSettings& settings_in, const Raster& loss_grad) {
    const RenderSettings settings = resolve_dims(settings_in, cam);
    if (loss_grad.width() != settings.width || loss_grad.height() != settings.height ||
        loss_grad.channels() != 3)
        throw std::invalid_argument("rasterize_with_grad: loss_grad dimension mismatch");

    auto vis = project_and_sort(cloud, cam, settings);
    const double cutoff2 = settings.cutoff * settings.cutoff;

    SplatGradients grads;
    grads.resize(cloud.size());

    // per visible splat: accumulated dL/dmean2d and dL/dconic from all pixels
    std::vector<Vec2> d_mean(vis.size(), Vec2::Zero());
    std::vector<Eigen::Matrix2d> d_conic(vis.size(), Eigen::Matrix2d::Zero());

    struct Contribution {
        int slot;       // index into vis
        double alpha;   // composited alpha at this pixel
        double gauss;   // exp(-mahal2/2)
        Vec2 d;
        double trans;   // transmittance before this splat
    };
    std::vector<Contribution> contribs;
    contribs.reserve(vis.size());

    for (int py = 0; py < settings.height; ++py) {
        for (int px = 0; px < settings.width; ++px) {
            // forward replay, recording contributors
            contribs.clear();
            double trans = 1.0;
            for (size_t s = 0; s < vis.size(); ++s) {
                const auto& v = vis[s];
                Vec2 d(px - v.proj.mean2d.x(), py - v.proj.mean2d.y());
                double mahal2 = d.dot(v.conic * d);
                if (mahal2 > cutoff2) continue;
                double gauss = std::exp(-0.5 * mahal2);
                double alpha = v.alpha * gauss;
                if (alpha < settings.alpha_floor) continue;
                contribs.push_back({static_cast<int>(s), alpha, gauss, d, trans});
                trans *= 1.0 - alpha;
                if (trans < settings.transmittance_floor) break;
            }

            Vec3 gl(loss_grad.at(px, py, 0), loss_grad.at(px, py, 1), loss_grad.at(px, py, 2));
            if (gl.isZero()) continue;

            // back-to-front: rest = contribution of everything behind splat i
            Vec3 rest = trans * settings.background;
            for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                const auto& c = *it;
                const auto& v = vis[c.slot];
                const Splat& sp = cloud.splats[v.index];

                // color
                Vec3 d_rgb = gl * (c.alpha * c.trans);
                for (int ch = 0; ch < 3; ++ch)
                    if (0.5 + kShC0 * sp.color(ch) > 0.0)  // clamped channels get no gradient
                        grads.color[v.index](ch) += kShC0 * d_rgb(ch);

                // alpha chain
                double d_alpha = gl.dot(v.rgb * c.trans - rest / (1.0 - c.alpha));
                rest += v.rgb * (c.alpha * c.trans);

                double a = v.alpha;  // sigmoid(opacity_logit)
                grads.opacity_logit[v.index] += d_alpha * c.gauss * a * (1.0 - a);

                // through the 2D Gaussian
                double d_gauss = d_alpha * a;
                double d_mahal2 = -0.5 * c.gauss * d_gauss;
                Vec2 conic_d = v.conic * c.d;
                Vec2 dd = 2.0 * d_mahal2 * conic_d;   // dL/dd
                d_mean[c.slot] -= dd;
                d_conic[c.slot] += d_mahal2 * c.d * c.d.transpose();
            }
        }
    }

    // projection backward, once per visible splat
    Mat3 w = cam.rotation.toRotationMatrix();
    for (size_t s = 0; s < vis.size(); ++s) {
        const auto& v = vis[s];
        const Splat& sp = cloud.splats[v.index];
        if (d_mean[s].isZero() && d_conic[s].isZero()) continue;

        grads.mean2d[v.index] += d_mean[s];

        // dL/dcov2d = -conic * dL/dconic * conic (conic = cov2d^-1)
        Eigen::Matrix2d d_cov = -v.conic * d_conic[s] * v.conic;
        d_cov = 0.5 * (d_cov + d_cov.transpose()).eval();

        Vec3 m = cam.to_camera(sp.position);
        const double z = m.z();
        Eigen::Matrix<double, 2, 3> jac;
        jac << cam.fx / z, 0.0, -cam.fx * m.x() / (z * z),
               0.0, cam.fy / z, -cam.fy * m.y() / (z * z);
        Eigen::Matrix<double, 2, 3> u = jac * w;
        Mat3 sigma = covariance(sp.rotation, sp.log_scale);

        // Sigma gradient
        Mat3 d_sigma = u.transpose() * (d_cov + d_cov.transpose()) * u * 0.5;

        // Jacobian gradient: cov2d = U Sigma U^T, U = J W
        Eigen::Matrix<double, 2, 3> d_u = (d_cov + d_cov.transpose()) * u * sigma;
        Eigen::Matrix<double, 2, 3> d_jac = d_u * w.transpose();

        // camera-space mean gradient: through J and through mean2d
        Vec3 d_m = Vec3::Zero();
        const double z2 = z * z, z3 = z2 * z;
        d_m.x() += d_jac(0, 2) * (-cam.fx / z2);
        d_m.y() += d_jac(1, 2) * (-cam.fy / z2);
        d_m.z() += d_jac(0, 0) * (-cam.fx / z2) + d_jac(0, 2) * (2.0 * cam.fx * m.x() / z3) +
                   d_jac(1, 1) * (-cam.fy / z2) + d_jac(1, 2) * (2.0 * cam.fy * m.y() / z3);
        d_m.x() += d_mean[s].x() * cam.fx / z;
        d_m.y() += d_mean[s].y() * cam.fy / z;
        d_m.z() += d_mean[s].x() * (-cam.fx * m.x() / z2) +
                   d_mean[s].y() * (-cam.fy * m.y() / z2);

        grads.position[v.index] += w.transpose() * d_m;

        // Sigma = M M^T with M = R S
        Mat3 r = rotation_matrix(sp.rotation);
        Vec3 scales = sp.scales();
        Mat3 mm = r * scales.asDiagonal();
        Mat3 d_mm = (d_sigma + d_sigma.transpose()) * mm;

        for (int k = 0; k < 3; ++k) {
            double d_s = d_mm.col(k).dot(r.col(k));
            double sk = std::exp(sp.log_scale(k));
            if (sk >= kScaleMin && sk <= kScaleMax)  // clamped scales get no gradient
                grads.log_scale[v.index](k) += d_s * sk;
        }

        Mat3 d_r = d_mm * scales.asDiagonal();
        const double qw = sp.rotation(0), qx = sp.rotation(1);
        const double qy = sp.rotation(2), qz = sp.rotation(3);
        Mat3 dr_dw, dr_dx, dr_dy, dr_dz;
        dr_dw << 0, -qz, qy,  qz, 0, -qx,  -qy, qx, 0;
        dr_dx << 0, qy, qz,  qy, -2 * qx, -qw,  qz, qw, -2 * qx;
        dr_dy << -2 * qy, qx, qw,  qx, 0, qz,  -qw, qz, -2 * qy;
        dr_dz << -2 * qz, -qw, qx,  qw, -2 * qz, qy,  qx, qy, 0;
        grads.rotation[v.index](0) += 2.0 * d_r.cwiseProduct(dr_dw).sum();
        grads.rotation[v.index](1) += 2.0 * d_r.cwiseProduct(dr_dx).sum();
        grads.rotation[v.index](2) += 2.0 * d_r.cwiseProduct(dr_dy).sum();
        grads.rotation[v.index](3) += 2.0 * d_r.cwiseProduct(dr_dz).sum();
    }

    return grads;
}

}  // namespace splat
