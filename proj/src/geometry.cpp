#include "splat/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "splat/lm.hpp"

namespace splat {

namespace {

constexpr int kRansacMaxIterations = 2000;
constexpr double kRansacConfidence = 0.99;

// Hartley normalization: centroid at origin, mean distance sqrt(2).
Mat3 normalizing_transform(const std::vector<Vec2>& pts) {
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(pts.size());
    double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Mat3 t = Mat3::Identity();
    t(0, 0) = s; t(1, 1) = s;
    t(0, 2) = -s * centroid.x();
    t(1, 2) = -s * centroid.y();
    return t;
}

// Normalized 8-point algorithm over the given correspondences.
Mat3 fit_fundamental(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    Mat3 ta = normalizing_transform(a);
    Mat3 tb = normalizing_transform(b);

    Eigen::MatrixXd m(a.size(), 9);
    for (size_t i = 0; i < a.size(); ++i) {
        Vec3 pa = ta * Vec3(a[i].x(), a[i].y(), 1.0);
        Vec3 pb = tb * Vec3(b[i].x(), b[i].y(), 1.0);
        m.row(i) << pb.x() * pa.x(), pb.x() * pa.y(), pb.x(),
                    pb.y() * pa.x(), pb.y() * pa.y(), pb.y(),
                    pa.x(), pa.y(), 1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    Eigen::VectorXd f = svd.matrixV().col(8);
    Mat3 fn;
    fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

    // rank-2 enforcement
    Eigen::JacobiSVD<Mat3> fsvd(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 sv = fsvd.singularValues();
    sv.z() = 0.0;
    fn = fsvd.matrixU() * sv.asDiagonal() * fsvd.matrixV().transpose();

    Mat3 out = tb.transpose() * fn * ta;
    double norm = out.norm();
    if (norm < 1e-15) return Mat3::Zero();
    return out / norm;
}

}  // namespace

double sampson_distance(const Mat3& f, const Vec2& a, const Vec2& b) {
    Vec3 pa(a.x(), a.y(), 1.0);
    Vec3 pb(b.x(), b.y(), 1.0);
    Vec3 fa = f * pa;
    Vec3 ftb = f.transpose() * pb;
    double num = pb.dot(fa);
    double denom = fa.x() * fa.x() + fa.y() * fa.y() + ftb.x() * ftb.x() + ftb.y() * ftb.y();
    if (denom < 1e-300) return std::numeric_limits<double>::infinity();
    return std::sqrt(num * num / denom);
}

VerifyResult verify_geometry(const std::vector<Match>& matches,
                             const std::vector<Feature>& feats_a,
                             const std::vector<Feature>& feats_b,
                             double threshold_px, uint64_t seed) {
    if (matches.size() < 8)
        throw std::runtime_error("verify_geometry: need >= 8 matches, got " +
                                 std::to_string(matches.size()));

    std::vector<Vec2> pa(matches.size()), pb(matches.size());
    for (size_t i = 0; i < matches.size(); ++i) {
        pa[i] = Vec2(feats_a[matches[i].index_a].x, feats_a[matches[i].index_a].y);
        pb[i] = Vec2(feats_b[matches[i].index_b].x, feats_b[matches[i].index_b].y);
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, matches.size() - 1);

    Mat3 best_f = Mat3::Zero();
    std::vector<int> best_inliers;
    int iterations = kRansacMaxIterations;
    for (int it = 0; it < iterations; ++it) {
        // sample 8 distinct correspondences
        std::vector<size_t> idx;
        while (idx.size() < 8) {
            size_t j = pick(rng);
            if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
        }
        std::vector<Vec2> sa, sb;
        for (size_t j : idx) { sa.push_back(pa[j]); sb.push_back(pb[j]); }
        Mat3 f = fit_fundamental(sa, sb);
        if (f.isZero()) continue;

        std::vector<int> inliers;
        for (size_t i = 0; i < matches.size(); ++i)
            if (sampson_distance(f, pa[i], pb[i]) < threshold_px)
                inliers.push_back(static_cast<int>(i));

        if (inliers.size() > best_inliers.size()) {
            best_inliers = std::move(inliers);
            best_f = f;
            // adaptive early exit
            double w = static_cast<double>(best_inliers.size()) / matches.size();
            double denom = std::log(1.0 - std::min(0.999999, std::pow(w, 8)));
            if (denom < 0.0) {
                // clamp before the int cast: a weak model makes this huge
                double needed = std::ceil(std::log(1.0 - kRansacConfidence) / denom);
                if (needed < static_cast<double>(iterations))
                    iterations = std::max(it + 1, static_cast<int>(needed));
            }
        }
    }

    if (best_inliers.size() < 8)
        throw std::runtime_error("verify_geometry: only " +
                                 std::to_string(best_inliers.size()) + " inliers found");

    // final least-squares refit on all inliers
    std::vector<Vec2> ia, ib;
    for (int i : best_inliers) { ia.push_back(pa[i]); ib.push_back(pb[i]); }
    Mat3 refined = fit_fundamental(ia, ib);
    if (!refined.isZero()) {
        std::vector<int> inliers;
        for (size_t i = 0; i < matches.size(); ++i)
            if (sampson_distance(refined, pa[i], pb[i]) < threshold_px)
                inliers.push_back(static_cast<int>(i));
        if (inliers.size() >= best_inliers.size()) {
            best_f = refined;
            best_inliers = std::move(inliers);
        }
    }

    VerifyResult res;
    res.fundamental = best_f;
    for (int i : best_inliers) res.inliers.push_back(matches[i]);
    return res;
}

Vec3 triangulate(const std::vector<Observation>& obs) {
    if (obs.size() < 2)
        throw std::invalid_argument("triangulate: need >= 2 observations");

    Eigen::MatrixXd m(2 * obs.size(), 4);
    for (size_t i = 0; i < obs.size(); ++i) {
        const Camera& c = obs[i].camera;
        // normalized ray direction in the camera frame
        double u = (obs[i].x - c.cx) / c.fx;
        double v = (obs[i].y - c.cy) / c.fy;
        Mat3 r = c.rotation.toRotationMatrix();
        Eigen::Matrix<double, 3, 4> p;
        p.leftCols<3>() = r;
        p.col(3) = c.translation;
        m.row(2 * i) = u * p.row(2) - p.row(0);
        m.row(2 * i + 1) = v * p.row(2) - p.row(1);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // with a unique solution only the smallest singular value vanishes;
    // a second vanishing value means the rays are (near-)parallel
    if (sv(2) < 1e-9 * std::max(sv(0), 1e-300))
        throw std::runtime_error("triangulate: degenerate geometry (parallel rays)");

    Eigen::Vector4d x = svd.matrixV().col(3);
    if (std::abs(x(3)) < 1e-12)
        throw std::runtime_error("triangulate: point at infinity");
    return x.head<3>() / x(3);
}

TwoViewPose relative_pose_from_fundamental(const Mat3& f, const Mat3& k,
                                           const std::vector<Vec2>& pts_a,
                                           const std::vector<Vec2>& pts_b) {
    Mat3 e = k.transpose() * f * k;
    Eigen::JacobiSVD<Mat3> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    if (u.determinant() < 0) u.col(2) *= -1;
    if (v.determinant() < 0) v.col(2) *= -1;

    Mat3 w;
    w << 0, -1, 0,
         1,  0, 0,
         0,  0, 1;
    Mat3 r1 = u * w * v.transpose();
    Mat3 r2 = u * w.transpose() * v.transpose();
    Vec3 t = u.col(2).normalized();

    Camera cam0;
    cam0.fx = k(0, 0); cam0.fy = k(1, 1);
    cam0.cx = k(0, 2); cam0.cy = k(1, 2);

    TwoViewPose best;
    int best_count = -1;
    for (const Mat3& r : {r1, r2}) {
        for (double sign : {1.0, -1.0}) {
            Camera cam1 = cam0;
            cam1.rotation = Quat(r).normalized();
            cam1.translation = sign * t;
            std::vector<int> ok;
            for (size_t i = 0; i < pts_a.size(); ++i) {
                try {
                    Vec3 x = triangulate({{cam0, pts_a[i].x(), pts_a[i].y()},
                                          {cam1, pts_b[i].x(), pts_b[i].y()}});
                    if (cam0.to_camera(x).z() > 0 && cam1.to_camera(x).z() > 0)
                        ok.push_back(static_cast<int>(i));
                } catch (const std::runtime_error&) {
                    // degenerate correspondence, skip
                }
            }
            if (static_cast<int>(ok.size()) > best_count) {
                best_count = static_cast<int>(ok.size());
                best.rotation = cam1.rotation;
                best.translation = cam1.translation;
                best.cheirality_ok = std::move(ok);
            }
        }
    }
    if (best_count <= 0)
        throw std::runtime_error("relative_pose_from_fundamental: cheirality check failed");
    return best;
}

Camera refine_pose(const Camera& initial, const std::vector<Vec3>& world,
                   const std::vector<Vec2>& pixels) {
    Mat3 r0 = initial.rotation.toRotationMatrix();
    auto residuals = [&](const Eigen::VectorXd& p) {
        Vec3 axis(p(0), p(1), p(2));
        double angle = axis.norm();
        Mat3 r = angle > 1e-15
                     ? (Eigen::AngleAxisd(angle, axis / angle).toRotationMatrix() * r0)
                     : r0;
        Vec3 t(p(3), p(4), p(5));
        Eigen::VectorXd res(2 * world.size());
        for (size_t i = 0; i < world.size(); ++i) {
            Vec3 pc = r * world[i] + t;
            double z = std::max(pc.z(), 1e-9);
            res(2 * i) = initial.fx * pc.x() / z + initial.cx - pixels[i].x();
            res(2 * i + 1) = initial.fy * pc.y() / z + initial.cy - pixels[i].y();
        }
        return res;
    };

    Eigen::VectorXd p0(6);
    p0 << 0, 0, 0, initial.translation.x(), initial.translation.y(), initial.translation.z();
    Eigen::VectorXd p = levenberg_marquardt(residuals, p0);

    Camera out = initial;
    Vec3 axis(p(0), p(1), p(2));
    double angle = axis.norm();
    Mat3 r = angle > 1e-15
                 ? (Eigen::AngleAxisd(angle, axis / angle).toRotationMatrix() * r0)
                 : r0;
    out.rotation = Quat(r).normalized();
    out.translation = Vec3(p(3), p(4), p(5));
    return out;
}

Camera solve_pnp(const std::vector<Vec3>& world, const std::vector<Vec2>& pixels,
                 const Camera& intrinsics) {
    if (world.size() < 6 || world.size() != pixels.size())
        throw std::invalid_argument("solve_pnp: need >= 6 correspondences");

    // DLT for the full projective camera, in normalized image coordinates
    Eigen::MatrixXd m(2 * world.size(), 12);
    for (size_t i = 0; i < world.size(); ++i) {
        double u = (pixels[i].x() - intrinsics.cx) / intrinsics.fx;
        double v = (pixels[i].y() - intrinsics.cy) / intrinsics.fy;
        Eigen::RowVector4d xh(world[i].x(), world[i].y(), world[i].z(), 1.0);
        m.row(2 * i).setZero();
        m.row(2 * i).segment<4>(0) = xh;
        m.row(2 * i).segment<4>(8) = -u * xh;
        m.row(2 * i + 1).setZero();
        m.row(2 * i + 1).segment<4>(4) = xh;
        m.row(2 * i + 1).segment<4>(8) = -v * xh;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    Eigen::VectorXd pv = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> p;
    p << pv(0), pv(1), pv(2), pv(3),
         pv(4), pv(5), pv(6), pv(7),
         pv(8), pv(9), pv(10), pv(11);

    // fix the projective sign so points land in front of the camera
    double depth_sum = 0.0;
    for (const auto& x : world)
        depth_sum += p.row(2).dot(Eigen::Vector4d(x.x(), x.y(), x.z(), 1.0));
    if (depth_sum < 0) p = -p;

    // closest rotation + scale
    Mat3 rs = p.leftCols<3>();
    Eigen::JacobiSVD<Mat3> rsvd(rs, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double scale = rsvd.singularValues().mean();
    Mat3 r = rsvd.matrixU() * rsvd.matrixV().transpose();
    if (r.determinant() < 0) {
        Mat3 d = Mat3::Identity();
        d(2, 2) = -1;
        r = rsvd.matrixU() * d * rsvd.matrixV().transpose();
    }
    Vec3 t = p.col(3) / scale;

    Camera cam = intrinsics;
    cam.rotation = Quat(r).normalized();
    cam.translation = t;
    return refine_pose(cam, world, pixels);
}

}  // namespace splat
