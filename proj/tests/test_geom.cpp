#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "css/geom.hpp"
#include "css/rng.hpp"
#include "fixtures.hpp"

using namespace css;

TEST_CASE("project and unproject are inverse under the identity pose") {
  Rng rng(1);
  const Intrinsics k = fixtures::make_intrinsics(64, 48, 70.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 px(rng.uniform(0, k.width - 1), rng.uniform(0, k.height - 1));
    const double depth = rng.uniform(0.5, 10.0);
    const Vec3 p = unproject(k, px, depth);
    CHECK(p.z() == doctest::Approx(depth).epsilon(1e-12));
    const Vec2 back = project(k, SE3Pose::identity(), p);
    CHECK(back.x() == doctest::Approx(px.x()).epsilon(1e-10));
    CHECK(back.y() == doctest::Approx(px.y()).epsilon(1e-10));
  }
}

TEST_CASE("a point on the optical axis projects to the principal point") {
  const Intrinsics k = fixtures::make_intrinsics(32, 24, 50.0);
  const Vec2 u = project(k, SE3Pose::identity(), Vec3(0, 0, 4.0));
  CHECK(u.x() == doctest::Approx(k.cx));
  CHECK(u.y() == doctest::Approx(k.cy));
}

TEST_CASE("projecting a point at or behind the camera throws") {
  const Intrinsics k = fixtures::make_intrinsics(32, 24, 50.0);
  CHECK_THROWS_AS(project(k, SE3Pose::identity(), Vec3(0, 0, -1.0)), BehindCamera);
  CHECK_THROWS_AS(project(k, SE3Pose::identity(), Vec3(0.3, 0.1, 0.0)), BehindCamera);
}

TEST_CASE("se3 compose and invert behave like rigid transforms") {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const SE3Pose a = fixtures::make_pose(rng, rng.uniform(1.0, 4.0));
    const SE3Pose b = fixtures::make_pose(rng, rng.uniform(1.0, 4.0));
    const Vec3 x = rng.normal3();

    const SE3Pose ab = se3_compose(a, b);
    CHECK((ab.apply(x) - a.apply(b.apply(x))).norm() < 1e-12);

    const SE3Pose inv = se3_invert(a);
    CHECK((inv.apply(a.apply(x)) - x).norm() < 1e-12);

    const SE3Pose ident = se3_compose(a, inv);
    CHECK((ident.apply(x) - x).norm() < 1e-12);
  }
}

TEST_CASE("camera_center maps to the camera-frame origin") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const SE3Pose p = fixtures::make_pose(rng, 3.0);
    CHECK(p.apply(p.camera_center()).norm() < 1e-12);
  }
}

TEST_CASE("spherical direction conversion round-trips") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec3 d = rng.unit_vector();
    double theta, phi;
    dir_to_spherical(d, theta, phi);
    CHECK(theta >= 0.0);
    CHECK(theta <= M_PI + 1e-12);
    CHECK((spherical_to_dir(theta, phi) - d).norm() < 1e-12);
  }
  // unnormalized input is normalized internally
  double theta, phi;
  dir_to_spherical(Vec3(0, 0, 5.0), theta, phi);
  CHECK(theta == doctest::Approx(0.0));
  CHECK_THROWS_AS(dir_to_spherical(Vec3::Zero(), theta, phi), ZeroVector);
}
