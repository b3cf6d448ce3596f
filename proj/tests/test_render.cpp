#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "css/render.hpp"
#include "css/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

struct GradScene {
  SplatSet splats;
  std::vector<ViewRecord> views;
  std::vector<SHLight> lights;
  RenderConfig cfg;
};

GradScene make_grad_scene(uint64_t seed, int n_splats = 4, int n_views = 2, int w = 16,
                          int h = 12) {
  Rng rng(seed);
  GradScene gs;
  gs.splats = fixtures::make_splat_set(rng, n_splats);
  for (int v = 0; v < n_views; ++v) {
    gs.views.push_back(fixtures::make_view(rng, w, h, 20.0));
    SHLight li = SHLight::zero(1);
    for (int ch = 0; ch < 3; ++ch) {
      li.coeffs(ch, 0) = rng.uniform(0.5, 2.0);
      for (int i = 1; i < 4; ++i) li.coeffs(ch, i) = rng.uniform(-0.3, 0.3);
    }
    gs.lights.push_back(li);
  }
  gs.cfg.cutoff_sigmas = 8.0;  // keep the cutoff far outside the finite-difference step
  return gs;
}

double loss_of(const GradScene& gs) {
  return photometric_loss_and_grad(gs.splats, gs.views, gs.lights, gs.cfg, nullptr);
}

}  // namespace

TEST_CASE("photometric gradient matches central finite differences") {
  for (uint64_t seed : {11u, 12u, 13u}) {
    GradScene gs = make_grad_scene(seed);
    RenderGrad grad;
    photometric_loss_and_grad(gs.splats, gs.views, gs.lights, gs.cfg, &grad);
    const double h = 1e-6;

    for (size_t j = 0; j < gs.splats.splats.size(); ++j) {
      for (int k = 0; k < 3; ++k) {
        const double fd_w = oracles::central_diff(
            [&](double x) {
              GradScene t = gs;
              t.splats.splats[j].weight[k] = x;
              return loss_of(t);
            },
            gs.splats.splats[j].weight[k], h);
        CHECK(oracles::grad_error(grad.d_weight[j][k], fd_w) < 1e-5);

        const double fd_m = oracles::central_diff(
            [&](double x) {
              GradScene t = gs;
              t.splats.splats[j].mean[k] = x;
              return loss_of(t);
            },
            gs.splats.splats[j].mean[k], h);
        CHECK(oracles::grad_error(grad.d_mean[j][k], fd_m) < 1e-4);

        const double fd_s = oracles::central_diff(
            [&](double x) {
              GradScene t = gs;
              t.splats.splats[j].scales[k] = x;
              return loss_of(t);
            },
            gs.splats.splats[j].scales[k], h);
        CHECK(oracles::grad_error(grad.d_scales[j][k], fd_s) < 1e-4);

        const double fd_r = oracles::central_diff(
            [&](double e) {
              GradScene t = gs;
              Vec3 omega = Vec3::Zero();
              omega[k] = e;
              t.splats.splats[j].rotation =
                  Eigen::Quaterniond(Eigen::AngleAxisd(omega.norm(),
                                                       omega.norm() > 0 ? omega.normalized()
                                                                        : Vec3::UnitX())) *
                  gs.splats.splats[j].rotation;
              return loss_of(t);
            },
            0.0, h);
        CHECK(oracles::grad_error(grad.d_rotation[j][k], fd_r) < 1e-4);
      }
    }

    for (size_t vi = 0; vi < gs.views.size(); ++vi) {
      for (int ch = 0; ch < 3; ++ch) {
        for (int i = 0; i < grad.d_sh[vi].cols(); ++i) {
          const double fd = oracles::central_diff(
              [&](double x) {
                GradScene t = gs;
                t.lights[vi].coeffs(ch, i) = x;
                return loss_of(t);
              },
              gs.lights[vi].coeffs(ch, i), h);
          CHECK(oracles::grad_error(grad.d_sh[vi](ch, i), fd) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("fast renderer agrees with the naive per-pixel oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    SplatSet set = fixtures::make_splat_set(rng, 12);
    const Intrinsics k = fixtures::make_intrinsics(32, 24, 30.0);
    const SE3Pose p = fixtures::make_pose(rng, 3.0);
    RenderConfig cfg;
    cfg.threads = 1 + trial % 4;
    const Image fast = render_reflectance(set, k, p, 24, 32, cfg);
    cfg.threads = 1;
    const Image naive = oracles::naive_render(set, k, p, 24, 32, cfg);
    double max_err = 0.0;
    max_err = std::max(max_err, (fast.r - naive.r).cwiseAbs().maxCoeff());
    max_err = std::max(max_err, (fast.g - naive.g).cwiseAbs().maxCoeff());
    max_err = std::max(max_err, (fast.b - naive.b).cwiseAbs().maxCoeff());
    CHECK(max_err < 1e-6);
  }
}

TEST_CASE("splats behind the camera are culled") {
  Rng rng(5);
  Splat s = fixtures::make_splat(rng);
  SE3Pose p;  // identity: camera at origin looking down +z
  s.mean = Vec3(0, 0, -2);
  CHECK(!project_splat(s, fixtures::make_intrinsics(16, 16, 20.0), p).has_value());
  s.mean = Vec3(0, 0, 2);
  CHECK(project_splat(s, fixtures::make_intrinsics(16, 16, 20.0), p).has_value());
}

TEST_CASE("projected covariance eigenvalues respect the pixel floor") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    Splat s = fixtures::make_splat(rng, 1e-5, 1e-4);  // tiny: floor must engage
    const SE3Pose p = fixtures::make_pose(rng, 3.0);
    const auto proj = project_splat(s, fixtures::make_intrinsics(32, 24, 30.0), p);
    if (!proj) continue;
    Eigen::SelfAdjointEigenSolver<Mat2> es(proj->cov2d);
    CHECK(es.eigenvalues().minCoeff() >= kCovFloor2d - 1e-12);
  }
}

TEST_CASE("training trace is non-increasing and loss drops") {
  GradScene gs = make_grad_scene(99, 6, 2, 20, 16);
  gs.cfg.train_iters = 40;
  gs.cfg.cutoff_sigmas = 3.0;
  const TrainResult res = train(gs.splats, gs.views, gs.lights, gs.cfg);
  REQUIRE(res.loss_trace.size() >= 2);
  for (size_t i = 1; i < res.loss_trace.size(); ++i) {
    CHECK(res.loss_trace[i] <= res.loss_trace[i - 1]);
  }
  CHECK(res.loss_trace.back() < res.loss_trace.front());
}
