#pragma once

#include <optional>
#include <vector>

#include "css/ginit.hpp"
#include "css/illum.hpp"
#include "css/view.hpp"

namespace css {

struct RenderConfig {
  // 6 sigma: the truncation step of exp(-18) is far below photometric noise,
  // so descent never stalls on a cutoff boundary
  double cutoff_sigmas = 6.0;
  Vec3 background = Vec3::Zero();
  int train_iters = 1000;
  double step_weight = 1e-2;
  double step_mean = 1e-4;  // multiplied by scene_scale
  double step_scales = 1e-3;
  double step_rotation = 1e-3;
  double step_sh = 1e-2;
  bool optimize_splats = true;
  bool optimize_lights = true;
  int threads = 1;
};

struct RenderedView {
  Image reflectance;
  Image illumination;
  Image composed;  // reflectance (*) illumination
};

inline constexpr double kNearPlane = 1e-4;
inline constexpr double kCovFloor2d = 0.3;  // px^2 eigenvalue floor

struct ProjectedSplat {
  Vec2 mean2d;
  Mat2 cov2d;  // symmetrized, eigenvalue-floored
};

// EWA-style perspective linearization; nullopt = culled (behind camera).
std::optional<ProjectedSplat> project_splat(const Splat& s, const Intrinsics& K,
                                            const SE3Pose& P);

// Additive accumulation: R(u) = bg + sum_j w_j exp(-0.5 d' Sigma2d^-1 d),
// evaluated within cutoff_sigmas.
Image render_reflectance(const SplatSet& splats, const Intrinsics& K, const SE3Pose& P,
                         int height, int width, const RenderConfig& cfg);

// Per-pixel illumination from the view's point-map directions (camera frame);
// invalid pixels fall back to the unprojected unit ray.
Image eval_view_illumination(const SHLight& light, const ViewRecord& view);

RenderedView compose(const Image& reflectance, const SHLight& light, const ViewRecord& view);

// Masked mean-squared photometric objective over all views and its analytic
// gradient with respect to every splat parameter and every view's SH coeffs.
struct RenderGrad {
  std::vector<Vec3> d_weight;
  std::vector<Vec3> d_mean;
  std::vector<Vec3> d_scales;
  std::vector<Vec3> d_rotation;  // tangent, left-multiplicative
  std::vector<Eigen::MatrixXd> d_sh;  // per view, 3 x (order+1)^2
};

double photometric_loss_and_grad(const SplatSet& splats, const std::vector<ViewRecord>& views,
                                 const std::vector<SHLight>& lights,
                                 const RenderConfig& cfg, RenderGrad* grad);

struct TrainResult {
  SplatSet splats;
  std::vector<SHLight> lights;
  std::vector<double> loss_trace;  // accepted steps only, non-increasing
};

TrainResult train(const SplatSet& splats, const std::vector<ViewRecord>& views,
                  const std::vector<SHLight>& lights, const RenderConfig& cfg);

}  // namespace css
