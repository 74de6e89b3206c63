#include "splat/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "splat/imaging.hpp"
#include "splat/lm.hpp"

namespace splat {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct PairResult {
    int view_a, view_b;
    VerifyResult verified;
};

double reproj_error(const Camera& cam, const Vec3& point, double px, double py) {
    auto proj = cam.project(point);
    if (!proj) return std::numeric_limits<double>::infinity();
    return std::hypot(proj->x() - px, proj->y() - py);
}

struct ReconState {
    std::vector<std::vector<Feature>> feats;
    std::vector<Camera> cameras;
    std::vector<bool> registered;
    std::vector<std::vector<TrackObservation>> tracks;
    std::vector<Vec3> points;
    std::vector<bool> active;  // per track: has a live 3D point
    int anchor = -1;
};

// Global LM bundle adjustment over all registered poses (anchor fixed)
// and all active points.
void bundle_adjust(ReconState& st, double /*outlier_threshold*/) {
    std::vector<int> cam_ids;
    for (size_t v = 0; v < st.cameras.size(); ++v)
        if (st.registered[v] && static_cast<int>(v) != st.anchor)
            cam_ids.push_back(static_cast<int>(v));
    std::vector<int> pt_ids;
    for (size_t t = 0; t < st.tracks.size(); ++t)
        if (st.active[t]) pt_ids.push_back(static_cast<int>(t));
    if (pt_ids.empty()) return;

    const int n_params = 6 * static_cast<int>(cam_ids.size()) + 3 * static_cast<int>(pt_ids.size());

    // residual layout: for each active point, its observations in registered views
    struct Res { int track, cam_slot, view, feature; };
    std::vector<Res> layout;
    for (size_t s = 0; s < pt_ids.size(); ++s) {
        int t = pt_ids[s];
        for (const auto& obs : st.tracks[t]) {
            if (!st.registered[obs.view]) continue;
            int slot = -1;
            for (size_t c = 0; c < cam_ids.size(); ++c)
                if (cam_ids[c] == obs.view) { slot = static_cast<int>(c); break; }
            layout.push_back({t, slot, obs.view, obs.feature});
        }
    }
    if (layout.empty()) return;

    std::vector<Mat3> base_rot(cam_ids.size());
    for (size_t c = 0; c < cam_ids.size(); ++c)
        base_rot[c] = st.cameras[cam_ids[c]].rotation.toRotationMatrix();

    auto decode_camera = [&](const Eigen::VectorXd& p, int slot) {
        Camera cam = st.cameras[cam_ids[slot]];
        Vec3 axis(p(6 * slot), p(6 * slot + 1), p(6 * slot + 2));
        double angle = axis.norm();
        Mat3 r = angle > 1e-15
                     ? (Eigen::AngleAxisd(angle, axis / angle).toRotationMatrix() * base_rot[slot])
                     : base_rot[slot];
        cam.rotation = Quat(r).normalized();
        cam.translation = Vec3(p(6 * slot + 3), p(6 * slot + 4), p(6 * slot + 5));
        return cam;
    };

    std::map<int, int> track_slot;
    for (size_t s = 0; s < pt_ids.size(); ++s) track_slot[pt_ids[s]] = static_cast<int>(s);
    const int pt_base = 6 * static_cast<int>(cam_ids.size());

    auto residuals = [&](const Eigen::VectorXd& p) {
        std::vector<Camera> cams(cam_ids.size());
        for (size_t c = 0; c < cam_ids.size(); ++c) cams[c] = decode_camera(p, static_cast<int>(c));
        Eigen::VectorXd res(2 * layout.size());
        for (size_t i = 0; i < layout.size(); ++i) {
            const Res& rr = layout[i];
            int ps = pt_base + 3 * track_slot[rr.track];
            Vec3 x(p(ps), p(ps + 1), p(ps + 2));
            const Camera& cam = rr.cam_slot >= 0 ? cams[rr.cam_slot] : st.cameras[st.anchor];
            Vec3 pc = cam.to_camera(x);
            double z = std::max(pc.z(), 1e-9);
            const Feature& f = st.feats[rr.view][rr.feature];
            res(2 * i) = cam.fx * pc.x() / z + cam.cx - f.x;
            res(2 * i + 1) = cam.fy * pc.y() / z + cam.cy - f.y;
        }
        return res;
    };

    Eigen::VectorXd p0(n_params);
    for (size_t c = 0; c < cam_ids.size(); ++c) {
        p0.segment<3>(6 * c).setZero();
        p0.segment<3>(6 * c + 3) = st.cameras[cam_ids[c]].translation;
    }
    for (size_t s = 0; s < pt_ids.size(); ++s)
        p0.segment<3>(pt_base + 3 * s) = st.points[pt_ids[s]];

    LMOptions opts;
    opts.max_iterations = 100;
    opts.relative_tolerance = 1e-8;
    Eigen::VectorXd p = levenberg_marquardt(residuals, p0, opts);

    for (size_t c = 0; c < cam_ids.size(); ++c)
        st.cameras[cam_ids[c]] = decode_camera(p, static_cast<int>(c));
    for (size_t s = 0; s < pt_ids.size(); ++s)
        st.points[pt_ids[s]] = p.segment<3>(pt_base + 3 * s);
}

// Triangulates untriangulated tracks with >= 2 registered observations;
// accepts a point only if it is in front of and reprojects within the
// threshold in every registered view.
void triangulate_tracks(ReconState& st, double threshold) {
    for (size_t t = 0; t < st.tracks.size(); ++t) {
        if (st.active[t]) continue;
        std::vector<Observation> obs;
        for (const auto& o : st.tracks[t])
            if (st.registered[o.view])
                obs.push_back({st.cameras[o.view], st.feats[o.view][o.feature].x,
                               st.feats[o.view][o.feature].y});
        if (obs.size() < 2) continue;
        try {
            Vec3 x = triangulate(obs);
            bool ok = true;
            for (const auto& o : obs) {
                if (o.camera.to_camera(x).z() <= 0 ||
                    reproj_error(o.camera, x, o.x, o.y) > threshold) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                st.points[t] = x;
                st.active[t] = true;
            }
        } catch (const std::runtime_error&) {
            // degenerate track, leave inactive
        }
    }
}

// Drops points whose reprojection exceeds the threshold or that fall
// behind any observing registered camera.
void filter_outliers(ReconState& st, double threshold) {
    for (size_t t = 0; t < st.tracks.size(); ++t) {
        if (!st.active[t]) continue;
        for (const auto& o : st.tracks[t]) {
            if (!st.registered[o.view]) continue;
            const Feature& f = st.feats[o.view][o.feature];
            if (st.cameras[o.view].to_camera(st.points[t]).z() <= 0 ||
                reproj_error(st.cameras[o.view], st.points[t], f.x, f.y) > threshold) {
                st.active[t] = false;
                break;
            }
        }
    }
}

}  // namespace

SfmResult incremental_reconstruct(const std::vector<Raster>& images,
                                  const std::vector<BinaryMask>& masks,
                                  const Camera& intrinsics, const SfmConfig& config) {
    if (images.size() < 2)
        throw std::invalid_argument("incremental_reconstruct: need >= 2 images");
    if (images.size() != masks.size())
        throw std::invalid_argument("incremental_reconstruct: images/masks length mismatch");

    const int n_views = static_cast<int>(images.size());
    SfmResult result;

    // only the intrinsics of the template camera matter; the gauge is
    // anchored at an identity pose regardless of any pose it carries
    Camera base = intrinsics;
    base.rotation = Quat::Identity();
    base.translation = Vec3::Zero();

    ReconState st;
    st.feats.resize(n_views);
    st.cameras.assign(n_views, base);
    st.registered.assign(n_views, false);

    // masked detection; descriptors from the original grayscale by default
    for (int v = 0; v < n_views; ++v) {
        Raster gray = images[v].channels() == 3 ? to_grayscale(images[v]) : images[v];
        if (config.descriptors_from_original) {
            st.feats[v] = detect_features_masked(gray, masks[v], config.max_features);
        } else {
            Raster composited_gray =
                images[v].channels() == 3
                    ? to_grayscale(composite_white(images[v], masks[v]))
                    : gray;
            st.feats[v] = detect_features_masked(gray, masks[v], config.max_features,
                                                 &composited_gray);
        }
    }

    // pairwise matching + geometric verification
    std::vector<PairResult> pairs;
    for (int a = 0; a < n_views; ++a) {
        for (int b = a + 1; b < n_views; ++b) {
            auto matches = match_features(st.feats[a], st.feats[b], config.match_ratio);
            if (matches.size() < 8) continue;
            try {
                auto verified = verify_geometry(matches, st.feats[a], st.feats[b],
                                                config.ransac_threshold_px,
                                                config.seed + static_cast<uint64_t>(a) * 1000 + b);
                pairs.push_back({a, b, std::move(verified)});
            } catch (const std::runtime_error&) {
                // pair failed verification, skip
            }
        }
    }
    if (pairs.empty())
        throw std::runtime_error("incremental_reconstruct: no verifiable initial pair");

    // tracks via union-find over verified matches
    std::vector<int> offset(n_views + 1, 0);
    for (int v = 0; v < n_views; ++v)
        offset[v + 1] = offset[v] + static_cast<int>(st.feats[v].size());
    UnionFind uf(offset[n_views]);
    for (const auto& pr : pairs)
        for (const auto& m : pr.verified.inliers)
            uf.unite(offset[pr.view_a] + m.index_a, offset[pr.view_b] + m.index_b);

    std::map<int, std::vector<TrackObservation>> groups;
    for (int v = 0; v < n_views; ++v)
        for (size_t f = 0; f < st.feats[v].size(); ++f)
            groups[uf.find(offset[v] + static_cast<int>(f))].push_back(
                {v, static_cast<int>(f)});
    for (auto& [root, members] : groups) {
        if (members.size() < 2) continue;
        std::set<int> views;
        bool consistent = true;
        for (const auto& o : members)
            if (!views.insert(o.view).second) { consistent = false; break; }
        if (consistent) st.tracks.push_back(members);
    }
    st.points.assign(st.tracks.size(), Vec3::Zero());
    st.active.assign(st.tracks.size(), false);

    // two-view initialization: most inliers subject to a median
    // triangulation angle above the floor
    std::sort(pairs.begin(), pairs.end(), [](const PairResult& x, const PairResult& y) {
        return x.verified.inliers.size() > y.verified.inliers.size();
    });
    const double min_angle = config.min_triangulation_angle_deg * M_PI / 180.0;
    bool initialized = false;
    for (const auto& pr : pairs) {
        std::vector<Vec2> pa, pb;
        for (const auto& m : pr.verified.inliers) {
            pa.emplace_back(st.feats[pr.view_a][m.index_a].x, st.feats[pr.view_a][m.index_a].y);
            pb.emplace_back(st.feats[pr.view_b][m.index_b].x, st.feats[pr.view_b][m.index_b].y);
        }
        TwoViewPose pose;
        try {
            pose = relative_pose_from_fundamental(pr.verified.fundamental, intrinsics.K(),
                                                  pa, pb);
        } catch (const std::runtime_error&) {
            continue;
        }
        if (pose.cheirality_ok.size() < 8) continue;

        Camera cam_a = base;  // identity pose
        Camera cam_b = base;
        cam_b.rotation = pose.rotation;
        cam_b.translation = pose.translation;

        std::vector<double> angles;
        for (int i : pose.cheirality_ok) {
            Vec3 x = triangulate({{cam_a, pa[i].x(), pa[i].y()}, {cam_b, pb[i].x(), pb[i].y()}});
            Vec3 r0 = (x - cam_a.center()).normalized();
            Vec3 r1 = (x - cam_b.center()).normalized();
            angles.push_back(std::acos(std::clamp(r0.dot(r1), -1.0, 1.0)));
        }
        std::nth_element(angles.begin(), angles.begin() + angles.size() / 2, angles.end());
        if (angles[angles.size() / 2] <= min_angle) continue;

        st.anchor = pr.view_a;
        st.cameras[pr.view_a] = cam_a;
        st.cameras[pr.view_b] = cam_b;
        st.registered[pr.view_a] = true;
        st.registered[pr.view_b] = true;
        initialized = true;
        break;
    }
    if (!initialized)
        throw std::runtime_error("incremental_reconstruct: no verifiable initial pair");

    // the eight-point pose is noisy, so admit points generously, let
    // bundle adjustment pull the pose in, then filter at the real gate
    triangulate_tracks(st, 8.0 * config.outlier_threshold_px);
    bundle_adjust(st, config.outlier_threshold_px);
    filter_outliers(st, config.outlier_threshold_px);
    triangulate_tracks(st, config.outlier_threshold_px);
    bundle_adjust(st, config.outlier_threshold_px);
    filter_outliers(st, config.outlier_threshold_px);

    // incremental registration of remaining views
    std::vector<bool> failed(n_views, false);
    while (true) {
        int best_view = -1;
        size_t best_count = 0;
        for (int v = 0; v < n_views; ++v) {
            if (st.registered[v] || failed[v]) continue;
            size_t count = 0;
            for (size_t t = 0; t < st.tracks.size(); ++t)
                if (st.active[t])
                    for (const auto& o : st.tracks[t])
                        if (o.view == v) { ++count; break; }
            if (count > best_count) { best_count = count; best_view = v; }
        }
        if (best_view < 0 || best_count < 6) break;

        std::vector<Vec3> world;
        std::vector<Vec2> pixels;
        for (size_t t = 0; t < st.tracks.size(); ++t) {
            if (!st.active[t]) continue;
            for (const auto& o : st.tracks[t])
                if (o.view == best_view) {
                    world.push_back(st.points[t]);
                    pixels.emplace_back(st.feats[best_view][o.feature].x,
                                        st.feats[best_view][o.feature].y);
                    break;
                }
        }

        try {
            Camera cam = solve_pnp(world, pixels, base);
            std::vector<Vec3> in_w;
            std::vector<Vec2> in_p;
            for (size_t i = 0; i < world.size(); ++i)
                if (reproj_error(cam, world[i], pixels[i].x(), pixels[i].y()) <=
                    config.outlier_threshold_px) {
                    in_w.push_back(world[i]);
                    in_p.push_back(pixels[i]);
                }
            if (in_w.size() < 6)
                throw std::runtime_error("too few PnP inliers");
            cam = refine_pose(cam, in_w, in_p);
            st.cameras[best_view] = cam;
            st.registered[best_view] = true;
        } catch (const std::runtime_error& e) {
            failed[best_view] = true;
            result.warnings.push_back("view " + std::to_string(best_view) +
                                      " failed registration: " + e.what());
            continue;
        }

        triangulate_tracks(st, config.outlier_threshold_px);
        filter_outliers(st, config.outlier_threshold_px);
        bundle_adjust(st, config.outlier_threshold_px);
        filter_outliers(st, config.outlier_threshold_px);
    }

    for (int v = 0; v < n_views; ++v)
        if (!st.registered[v] && !failed[v])
            result.warnings.push_back("view " + std::to_string(v) +
                                      " skipped: too few 3D correspondences");

    // gauge: anchor camera is identity by construction; rescale so the
    // initial-pair baseline has unit norm
    double baseline = 0.0;
    for (int v = 0; v < n_views; ++v)
        if (st.registered[v] && v != st.anchor) {
            baseline = st.cameras[v].center().norm();
            break;
        }
    // the first registered non-anchor view is the second init camera
    for (const auto& pr : pairs) {
        if (st.registered[pr.view_a] && st.registered[pr.view_b] &&
            (pr.view_a == st.anchor || pr.view_b == st.anchor)) {
            int other = pr.view_a == st.anchor ? pr.view_b : pr.view_a;
            baseline = st.cameras[other].center().norm();
            break;
        }
    }
    if (baseline > 1e-12) {
        const double s = 1.0 / baseline;
        for (int v = 0; v < n_views; ++v)
            if (st.registered[v]) st.cameras[v].translation *= s;
        for (auto& x : st.points) x *= s;
    }

    // assemble the cloud: active tracks restricted to registered views
    double err_sum = 0.0;
    size_t err_count = 0;
    for (size_t t = 0; t < st.tracks.size(); ++t) {
        if (!st.active[t]) continue;
        std::vector<TrackObservation> obs;
        Vec3 color = Vec3::Zero();
        for (const auto& o : st.tracks[t]) {
            if (!st.registered[o.view]) continue;
            obs.push_back(o);
            const Feature& f = st.feats[o.view][o.feature];
            int px = std::clamp(static_cast<int>(std::lround(f.x)), 0, images[o.view].width() - 1);
            int py = std::clamp(static_cast<int>(std::lround(f.y)), 0, images[o.view].height() - 1);
            if (images[o.view].channels() == 3)
                color += Vec3(images[o.view].at(px, py, 0), images[o.view].at(px, py, 1),
                              images[o.view].at(px, py, 2));
            else
                color += Vec3::Constant(images[o.view].at(px, py));
            err_sum += reproj_error(st.cameras[o.view], st.points[t], f.x, f.y);
            ++err_count;
        }
        if (obs.size() < 2) continue;
        result.cloud.points.push_back(st.points[t]);
        result.cloud.colors.push_back(color / static_cast<double>(obs.size()));
        result.cloud.tracks.push_back(std::move(obs));
    }
    if (result.cloud.points.empty())
        throw std::runtime_error("incremental_reconstruct: reconstruction produced no points");

    result.cameras = st.cameras;
    result.registered = st.registered;
    result.mean_reprojection_error = err_count ? err_sum / static_cast<double>(err_count) : 0.0;
    return result;
}

SparseCloud filter_background_points(const SparseCloud& cloud,
                                     const std::vector<Camera>& cameras,
                                     const std::vector<BinaryMask>& masks,
                                     double fraction) {
    if (cameras.size() != masks.size())
        throw std::invalid_argument("filter_background_points: cameras/masks mismatch");

    SparseCloud out;
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        int observing = 0, in_mask = 0;
        for (const auto& o : cloud.tracks[i]) {
            if (o.view < 0 || o.view >= static_cast<int>(cameras.size())) continue;
            ++observing;
            auto proj = cameras[o.view].project(cloud.points[i]);
            if (!proj) continue;
            int px = static_cast<int>(std::lround(proj->x()));
            int py = static_cast<int>(std::lround(proj->y()));
            const BinaryMask& m = masks[o.view];
            if (px >= 0 && px < m.width() && py >= 0 && py < m.height() && m.at(px, py))
                ++in_mask;
        }
        int needed = static_cast<int>(std::ceil(fraction * observing));
        if (observing > 0 && in_mask >= needed && needed >= 0) {
            out.points.push_back(cloud.points[i]);
            out.colors.push_back(cloud.colors[i]);
            out.tracks.push_back(cloud.tracks[i]);
        }
    }
    return out;
}

double mean_reprojection_error(const SparseCloud& cloud, const std::vector<Camera>& cameras,
                               const std::vector<std::vector<Feature>>& features) {
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        for (const auto& o : cloud.tracks[i]) {
            const Feature& f = features[o.view][o.feature];
            sum += reproj_error(cameras[o.view], cloud.points[i], f.x, f.y);
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace splat
