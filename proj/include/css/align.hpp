#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "css/view.hpp"

namespace css {

struct AlignConfig {
  double lambda = 1.0;
  int coarse_iters = 300;
  int fine_iters = 300;
  double step_size = 1e-2;
  double convergence_tol = 0.0;  // relative loss change; 0 disables
};

// Views plus pairwise correspondence sets keyed by ordered view pair (i < j).
// Each stored pair contributes both transport directions to the losses.
struct ViewGraph {
  std::vector<ViewRecord> views;
  std::map<std::pair<int, int>, MatchSet> matches;
};

struct LossReport {
  double l_d = 0.0, l_c = 0.0, l_f = 0.0;
  double l_s1 = 0.0, l_s2 = 0.0;
  std::map<std::pair<int, int>, Vec3> per_pair;  // (l_d, l_c, l_f) contributions
};

// Gradients with respect to the free variables. Rotation entries are
// left-multiplicative tangent vectors (q <- exp(w) * q). Point gradients are
// indexed through the registry below.
struct PointVarIndex {
  // per view: sorted linear pixel indices of optimized-point variables
  std::vector<std::vector<int>> pixels;
  std::vector<std::map<int, int>> lookup;  // linear pixel -> slot

  static PointVarIndex build(const ViewGraph& g);
};

struct AlignGrad {
  std::vector<Vec3> d_rot, d_trans;
  std::vector<Eigen::Vector4d> d_intr;            // (fx, fy, cx, cy)
  std::vector<std::vector<Vec3>> d_points;        // slot layout of PointVarIndex

  void resize_zero(const ViewGraph& g, const PointVarIndex& idx);
};

// Alignment losses; each throws EmptyMatches when the total confidence weight is 0.
double loss_distance(const ViewGraph& g, const PointVarIndex& idx, AlignGrad* grad,
                     LossReport* report = nullptr);
double loss_coarse(const ViewGraph& g, AlignGrad* grad, LossReport* report = nullptr);
double loss_reproj(const ViewGraph& g, const PointVarIndex& idx, AlignGrad* grad,
                   LossReport* report = nullptr);

LossReport evaluate_losses(const ViewGraph& g, double lambda);

bool graph_connected(const ViewGraph& g);

struct OptimizeResult {
  std::vector<LossReport> trace;  // accepted steps only
};

// Two-stage descent: stage 1 on L_D + lambda*L_C (poses, points), stage 2 on
// L_F + lambda*L_C (poses, points, intrinsics). View 0's pose is frozen.
// Optionally appends per-iteration records to trace_path.
OptimizeResult optimize(ViewGraph& g, const AlignConfig& cfg,
                        const std::string& trace_path = "");

}  // namespace css
