#include "doctest.h"

#include <cmath>
#include <random>

#include "splat/gaussian.hpp"

using namespace splat;

TEST_CASE("rotation_matrix reproduces canonical rotations") {
    Mat3 id = rotation_matrix(Eigen::Vector4d(1, 0, 0, 0));
    CHECK((id - Mat3::Identity()).norm() == doctest::Approx(0.0));

    // 90 degrees about z: (cos45, 0, 0, sin45)
    double s = std::sqrt(0.5);
    Mat3 rz = rotation_matrix(Eigen::Vector4d(s, 0, 0, s));
    Vec3 x = rz * Vec3(1, 0, 0);
    CHECK(x.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(x.y() == doctest::Approx(1.0));
    CHECK(x.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation_matrix agrees with Eigen quaternions for random unit input") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 20; ++i) {
        Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
        q.normalize();
        Mat3 ours = rotation_matrix(q);
        Mat3 ref = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
        CHECK((ours - ref).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("covariance is R S^2 R^T and stays symmetric positive definite") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> u(-2, 1);
    for (int i = 0; i < 10; ++i) {
        Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
        q.normalize();
        Vec3 ls(u(rng), u(rng), u(rng));
        Mat3 sigma = covariance(q, ls);
        Mat3 r = rotation_matrix(q);
        Vec3 s2 = (2.0 * ls).array().exp();
        Mat3 ref = r * s2.asDiagonal() * r.transpose();
        CHECK((sigma - ref).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK((sigma - sigma.transpose()).norm() == doctest::Approx(0.0));
        CHECK(Eigen::LLT<Mat3>(sigma).info() == Eigen::Success);
    }
}

TEST_CASE("density is 1 at the center and matches a diagonal hand case") {
    Mat3 sigma = Vec3(4.0, 1.0, 0.25).asDiagonal();
    CHECK(density(Vec3::Zero(), sigma) == doctest::Approx(1.0));
    // offset (2,0,0): exp(-0.5 * 4/4) = exp(-0.5)
    CHECK(density(Vec3(2, 0, 0), sigma) == doctest::Approx(std::exp(-0.5)));
    CHECK(density(Vec3(0, 1, 1), sigma) ==
          doctest::Approx(std::exp(-0.5 * (1.0 + 4.0))));
}

TEST_CASE("splat opacity and color mappings") {
    Splat s;
    s.opacity_logit = 0.0;
    CHECK(s.opacity() == doctest::Approx(0.5));
    s.color = Vec3::Zero();
    CHECK((s.rgb() - Vec3::Constant(0.5)).norm() == doctest::Approx(0.0));
    // strongly negative coefficients clamp at black
    s.color = Vec3::Constant(-10.0);
    CHECK(s.rgb() == Vec3::Zero());
    // scale clamps
    s.log_scale = Vec3::Constant(-100.0);
    CHECK(s.scales().x() == kScaleMin);
    s.log_scale = Vec3::Constant(100.0);
    CHECK(s.scales().x() == kScaleMax);
}

TEST_CASE("project_splat culls behind the near plane and projects through K") {
    Splat s;
    s.position = Vec3(0.5, -0.25, 2.0);
    s.log_scale = Vec3::Constant(std::log(0.1));
    Camera cam;
    cam.fx = cam.fy = 100;
    cam.cx = cam.cy = 32;
    cam.width = cam.height = 64;
    auto proj = project_splat(s, cam);
    REQUIRE(proj.has_value());
    CHECK(proj->mean2d.x() == doctest::Approx(100 * 0.25 + 32));
    CHECK(proj->mean2d.y() == doctest::Approx(100 * -0.125 + 32));
    CHECK(proj->depth == doctest::Approx(2.0));
    // the anti-aliasing floor keeps cov2d eigenvalues at 0.3 or above
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(proj->cov2d);
    CHECK(es.eigenvalues().minCoeff() >= 0.3 - 1e-12);

    s.position = Vec3(0, 0, -1.0);
    CHECK_FALSE(project_splat(s, cam).has_value());
    s.position = Vec3(0, 0, 0.001);
    CHECK_FALSE(project_splat(s, cam).has_value());
}

TEST_CASE("init_from_cloud seeds one isotropic splat per point") {
    SparseCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0)};
    cloud.colors = {Vec3(1, 0, 0), Vec3(0.5, 0.5, 0.5), Vec3(0, 0, 1)};
    cloud.tracks.resize(3);
    GaussianCloud gc = init_from_cloud(cloud);
    REQUIRE(gc.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const Splat& s = gc.splats[i];
        CHECK(s.position == cloud.points[i]);
        CHECK(s.opacity() == doctest::Approx(0.1));
        CHECK(s.log_scale.x() == doctest::Approx(s.log_scale.y()));
        CHECK(s.log_scale.x() == doctest::Approx(s.log_scale.z()));
        CHECK((s.rgb() - cloud.colors[i]).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
    // point 0: neighbors at distance 1 and 2 -> mean 1.5 (only 2 neighbors exist)
    CHECK(std::exp(gc.splats[0].log_scale.x()) == doctest::Approx(1.5));
}

TEST_CASE("init_from_cloud single point falls back to a small fixed scale") {
    SparseCloud cloud;
    cloud.points = {Vec3(1, 2, 3)};
    cloud.colors = {Vec3(0.2, 0.4, 0.6)};
    cloud.tracks.resize(1);
    GaussianCloud gc = init_from_cloud(cloud);
    REQUIRE(gc.size() == 1);
    CHECK(std::exp(gc.splats[0].log_scale.x()) == doctest::Approx(0.01));
}
