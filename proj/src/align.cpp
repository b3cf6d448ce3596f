#include "css/align.hpp"

#include <cmath>
#include <fstream>
#include <queue>

namespace css {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

double total_weight(const ViewGraph& g) {
  double sum = 0.0;
  for (const auto& [key, ms] : g.matches) {
    for (double w : ms.weights) sum += 2.0 * w;  // both transport directions
  }
  return sum;
}

struct Direction {
  int src, dst;
  Vec2 u_src, u_dst;
  double weight;
  std::pair<int, int> pair_key;
};

template <typename Fn>
void for_each_direction(const ViewGraph& g, Fn&& fn) {
  for (const auto& [key, ms] : g.matches) {
    for (size_t k = 0; k < ms.pairs.size(); ++k) {
      const PixelPair& pp = ms.pairs[k];
      fn(Direction{key.first, key.second, pp.a, pp.b, ms.weights[k], key});
      fn(Direction{key.second, key.first, pp.b, pp.a, ms.weights[k], key});
    }
  }
}

Vec3 init_point(const ViewRecord& v, const Vec2& u) {
  return v.points_init.at(pixel_row(u), pixel_col(u));
}
Vec3 opt_point(const ViewRecord& v, const Vec2& u) {
  return v.points_opt.at(pixel_row(u), pixel_col(u));
}

}  // namespace

PointVarIndex PointVarIndex::build(const ViewGraph& g) {
  PointVarIndex idx;
  idx.pixels.resize(g.views.size());
  idx.lookup.resize(g.views.size());
  for_each_direction(g, [&](const Direction& d) {
    const int lin = pixel_row(d.u_dst) * g.views[d.dst].width() + pixel_col(d.u_dst);
    idx.lookup[d.dst].emplace(lin, 0);
    const int lin_src = pixel_row(d.u_src) * g.views[d.src].width() + pixel_col(d.u_src);
    idx.lookup[d.src].emplace(lin_src, 0);
  });
  for (size_t v = 0; v < idx.lookup.size(); ++v) {
    int slot = 0;
    for (auto& [lin, s] : idx.lookup[v]) {
      s = slot++;
      idx.pixels[v].push_back(lin);
    }
  }
  return idx;
}

void AlignGrad::resize_zero(const ViewGraph& g, const PointVarIndex& idx) {
  d_rot.assign(g.views.size(), Vec3::Zero());
  d_trans.assign(g.views.size(), Vec3::Zero());
  d_intr.assign(g.views.size(), Eigen::Vector4d::Zero());
  d_points.resize(g.views.size());
  for (size_t v = 0; v < g.views.size(); ++v) {
    d_points[v].assign(idx.pixels[v].size(), Vec3::Zero());
  }
}

// Shared core of L_D and L_C: residual = target - P_dst P_src^-1 x_hat_src,
// where target is the optimized (L_D) or initial (L_C) point at the matched
// destination pixel.
static double transport_loss(const ViewGraph& g, const PointVarIndex* idx, bool use_opt_target,
                             AlignGrad* grad, LossReport* report) {
  const double sum_w = total_weight(g);
  if (sum_w <= 0.0) throw EmptyMatches("transport loss: total confidence weight is zero");

  double loss = 0.0;
  for_each_direction(g, [&](const Direction& d) {
    const ViewRecord& src = g.views[d.src];
    const ViewRecord& dst = g.views[d.dst];
    const Mat3 r_src = src.pose_opt.rotation_matrix();
    const Mat3 r_dst = dst.pose_opt.rotation_matrix();
    const Vec3 x_hat = init_point(src, d.u_src);
    const Vec3 v = x_hat - src.pose_opt.translation;
    const Vec3 m = r_src.transpose() * v;
    const Vec3 y = r_dst * m + dst.pose_opt.translation;
    const Vec3 target = use_opt_target ? opt_point(dst, d.u_dst) : init_point(dst, d.u_dst);
    const Vec3 r = target - y;
    const double term = d.weight * r.squaredNorm() / sum_w;
    loss += term;
    if (report) {
      Vec3& slot = report->per_pair.try_emplace(d.pair_key, Vec3::Zero()).first->second;
      if (use_opt_target) slot[0] += term; else slot[1] += term;
    }
    if (grad) {
      const double s = 2.0 * d.weight / sum_w;
      grad->d_rot[d.dst] += -s * (-skew(r_dst * m)).transpose() * r;
      grad->d_trans[d.dst] += -s * r;
      grad->d_rot[d.src] += -s * (r_dst * r_src.transpose() * skew(v)).transpose() * r;
      grad->d_trans[d.src] += -s * (-(r_dst * r_src.transpose())).transpose() * r;
      if (use_opt_target && idx) {
        const int lin = pixel_row(d.u_dst) * dst.width() + pixel_col(d.u_dst);
        grad->d_points[d.dst][idx->lookup[d.dst].at(lin)] += s * r;
      }
    }
  });
  return loss;
}

double loss_distance(const ViewGraph& g, const PointVarIndex& idx, AlignGrad* grad,
                     LossReport* report) {
  return transport_loss(g, &idx, true, grad, report);
}

double loss_coarse(const ViewGraph& g, AlignGrad* grad, LossReport* report) {
  return transport_loss(g, nullptr, false, grad, report);
}

double loss_reproj(const ViewGraph& g, const PointVarIndex& idx, AlignGrad* grad,
                   LossReport* report) {
  const double sum_w = total_weight(g);
  if (sum_w <= 0.0) throw EmptyMatches("loss_reproj: total confidence weight is zero");

  double loss = 0.0;
  for_each_direction(g, [&](const Direction& d) {
    const ViewRecord& src = g.views[d.src];
    const ViewRecord& dst = g.views[d.dst];
    const Mat3 r_src = src.pose_opt.rotation_matrix();
    const Mat3 r_dst = dst.pose_opt.rotation_matrix();
    const Vec3 xs = opt_point(src, d.u_src);
    const Vec3 xd = opt_point(dst, d.u_dst);
    const Vec3 ws = r_src.transpose() * (xs - src.pose_opt.translation);
    const Vec3 wd = r_dst.transpose() * (xd - dst.pose_opt.translation);
    const double cs = src.confidence.values(pixel_row(d.u_src), pixel_col(d.u_src));
    const double cd = dst.confidence.values(pixel_row(d.u_dst), pixel_col(d.u_dst));
    const double denom = cs + cd;
    const double alpha = denom > 0.0 ? cs / denom : 0.5;
    const double beta = 1.0 - alpha;
    const Vec3 xw = alpha * ws + beta * wd;
    const Vec3 p = r_src * xw + src.pose_opt.translation;

    const Intrinsics& K = src.intrinsics_opt;
    const double diag = std::sqrt(static_cast<double>(K.width) * K.width +
                                  static_cast<double>(K.height) * K.height);
    if (p.z() <= kDepthEpsilon) {
      // transient bad iterate: clamped constant residual, no gradient
      const double clamped = 4.0 * diag;
      const double term = d.weight * clamped * clamped / sum_w;
      loss += term;
      if (report) report->per_pair.try_emplace(d.pair_key, Vec3::Zero()).first->second[2] += term;
      return;
    }
    const double z = p.z();
    const Vec2 proj(K.fx * p.x() / z + K.cx, K.fy * p.y() / z + K.cy);
    const Vec2 r2 = d.u_src - proj;
    const double term = d.weight * r2.squaredNorm() / sum_w;
    loss += term;
    if (report) report->per_pair.try_emplace(d.pair_key, Vec3::Zero()).first->second[2] += term;

    if (grad) {
      const double s = 2.0 * d.weight / sum_w;
      Eigen::Matrix<double, 2, 3> jac;
      jac << K.fx / z, 0.0, -K.fx * p.x() / (z * z),
             0.0, K.fy / z, -K.fy * p.y() / (z * z);
      const Vec3 gp = -s * (jac.transpose() * r2);  // d loss / d p

      // pose src: direct motion of p plus the fused point's Ws dependence
      const Mat3 dp_dw_src = -skew(r_src * xw) + alpha * skew(xs - src.pose_opt.translation);
      grad->d_rot[d.src] += dp_dw_src.transpose() * gp;
      grad->d_trans[d.src] += (1.0 - alpha) * gp;

      const Mat3 rsd = r_src * r_dst.transpose();
      grad->d_rot[d.dst] += (beta * rsd * skew(xd - dst.pose_opt.translation)).transpose() * gp;
      grad->d_trans[d.dst] += (-beta * rsd).transpose() * gp;

      const int lin_s = pixel_row(d.u_src) * src.width() + pixel_col(d.u_src);
      const int lin_d = pixel_row(d.u_dst) * dst.width() + pixel_col(d.u_dst);
      grad->d_points[d.src][idx.lookup[d.src].at(lin_s)] += alpha * gp;
      grad->d_points[d.dst][idx.lookup[d.dst].at(lin_d)] += (beta * rsd).transpose() * gp;

      // intrinsics of the projecting view
      grad->d_intr[d.src][0] += -s * r2.x() * p.x() / z;
      grad->d_intr[d.src][1] += -s * r2.y() * p.y() / z;
      grad->d_intr[d.src][2] += -s * r2.x();
      grad->d_intr[d.src][3] += -s * r2.y();
    }
  });
  return loss;
}

LossReport evaluate_losses(const ViewGraph& g, double lambda) {
  LossReport rep;
  const PointVarIndex idx = PointVarIndex::build(g);
  rep.l_d = loss_distance(g, idx, nullptr, &rep);
  rep.l_c = loss_coarse(g, nullptr, &rep);
  rep.l_f = loss_reproj(g, idx, nullptr, &rep);
  rep.l_s1 = rep.l_d + lambda * rep.l_c;
  rep.l_s2 = rep.l_f + lambda * rep.l_c;
  return rep;
}

bool graph_connected(const ViewGraph& g) {
  const size_t n = g.views.size();
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const auto& [key, ms] : g.matches) {
    if (ms.pairs.empty()) continue;
    adj[key.first].push_back(key.second);
    adj[key.second].push_back(key.first);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  size_t count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = true;
        ++count;
        q.push(u);
      }
    }
  }
  return count == n;
}

namespace {

struct FlatState {
  std::vector<SE3Pose> poses;
  std::vector<Intrinsics> intr;
  std::vector<std::vector<Vec3>> points;
};

FlatState snapshot(const ViewGraph& g, const PointVarIndex& idx) {
  FlatState st;
  for (const auto& v : g.views) {
    st.poses.push_back(v.pose_opt);
    st.intr.push_back(v.intrinsics_opt);
  }
  st.points.resize(g.views.size());
  for (size_t v = 0; v < g.views.size(); ++v) {
    for (int lin : idx.pixels[v]) {
      const int r = lin / g.views[v].width(), c = lin % g.views[v].width();
      st.points[v].push_back(g.views[v].points_opt.at(r, c));
    }
  }
  return st;
}

void restore(ViewGraph& g, const PointVarIndex& idx, const FlatState& st) {
  for (size_t v = 0; v < g.views.size(); ++v) {
    g.views[v].pose_opt = st.poses[v];
    g.views[v].intrinsics_opt = st.intr[v];
    for (size_t k = 0; k < idx.pixels[v].size(); ++k) {
      const int lin = idx.pixels[v][k];
      g.views[v].points_opt.set(lin / g.views[v].width(), lin % g.views[v].width(),
                                st.points[v][k]);
    }
  }
}

// Flattened layout: per view (rot 3, trans 3, intr 4), then per view point slots.
size_t flat_size(const ViewGraph& g, const PointVarIndex& idx) {
  size_t n = g.views.size() * 10;
  for (const auto& p : idx.pixels) n += 3 * p.size();
  return n;
}

void flatten_grad(const ViewGraph& g, const PointVarIndex& idx, const AlignGrad& grad,
                  bool with_intrinsics, Eigen::VectorXd& out) {
  out.setZero(flat_size(g, idx));
  size_t off = 0;
  for (size_t v = 0; v < g.views.size(); ++v) {
    if (v != 0) {  // view 0 frozen (gauge)
      out.segment<3>(off) = grad.d_rot[v];
      out.segment<3>(off + 3) = grad.d_trans[v];
    }
    if (with_intrinsics) out.segment<4>(off + 6) = grad.d_intr[v];
    off += 10;
  }
  for (size_t v = 0; v < g.views.size(); ++v) {
    for (const auto& gp : grad.d_points[v]) {
      out.segment<3>(off) = gp;
      off += 3;
    }
  }
}

void apply_delta(ViewGraph& g, const PointVarIndex& idx, const Eigen::VectorXd& delta) {
  size_t off = 0;
  for (size_t v = 0; v < g.views.size(); ++v) {
    SE3Pose& p = g.views[v].pose_opt;
    const Vec3 w = delta.segment<3>(off);
    const double angle = w.norm();
    if (angle > 0.0) {
      p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle)) * p.rotation;
      p.renormalize();
    }
    p.translation += delta.segment<3>(off + 3);
    Intrinsics& K = g.views[v].intrinsics_opt;
    K.fx += delta(off + 6);
    K.fy += delta(off + 7);
    K.cx += delta(off + 8);
    K.cy += delta(off + 9);
    off += 10;
  }
  for (size_t v = 0; v < g.views.size(); ++v) {
    for (int lin : idx.pixels[v]) {
      const int r = lin / g.views[v].width(), c = lin % g.views[v].width();
      g.views[v].points_opt.set(r, c, g.views[v].points_opt.at(r, c) + delta.segment<3>(off));
      off += 3;
    }
  }
}

}  // namespace

OptimizeResult optimize(ViewGraph& g, const AlignConfig& cfg, const std::string& trace_path) {
  if (g.views.size() < 2) throw DisconnectedGraph("optimize: fewer than 2 views");
  if (!graph_connected(g)) throw DisconnectedGraph("optimize: view graph is not connected");

  for (auto& v : g.views) {
    v.points_opt = v.points_init;
    v.intrinsics_opt = v.intrinsics_init;
    v.pose_opt = v.pose_init;
  }
  const PointVarIndex idx = PointVarIndex::build(g);

  std::ofstream trace_file;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw IoError("optimize: cannot open trace file " + trace_path);
  }

  OptimizeResult result;
  int global_iter = 0;

  auto run_stage = [&](int stage, int iters) {
    const bool fine = stage == 2;
    auto objective = [&](AlignGrad* grad, LossReport* rep) -> double {
      AlignGrad main_grad, coarse_grad;
      if (grad) {
        main_grad.resize_zero(g, idx);
        coarse_grad.resize_zero(g, idx);
      }
      LossReport local;
      LossReport* lrep = rep ? rep : &local;
      double main;
      if (fine) {
        main = loss_reproj(g, idx, grad ? &main_grad : nullptr, rep);
        lrep->l_f = main;
        lrep->l_d = loss_distance(g, idx, nullptr, rep);
      } else {
        main = loss_distance(g, idx, grad ? &main_grad : nullptr, rep);
        lrep->l_d = main;
        lrep->l_f = loss_reproj(g, idx, nullptr, rep);
      }
      const double coarse = loss_coarse(g, grad ? &coarse_grad : nullptr, rep);
      lrep->l_c = coarse;
      if (grad) {
        for (size_t v = 0; v < g.views.size(); ++v) {
          grad->d_rot[v] = main_grad.d_rot[v] + cfg.lambda * coarse_grad.d_rot[v];
          grad->d_trans[v] = main_grad.d_trans[v] + cfg.lambda * coarse_grad.d_trans[v];
          grad->d_intr[v] = main_grad.d_intr[v];
          for (size_t k = 0; k < grad->d_points[v].size(); ++k) {
            grad->d_points[v][k] = main_grad.d_points[v][k];
          }
        }
      }
      return main + cfg.lambda * coarse;
    };

    AlignGrad grad;
    grad.resize_zero(g, idx);
    LossReport rep;
    double loss = objective(&grad, &rep);
    if (!std::isfinite(loss)) throw DivergedLoss("optimize: non-finite loss");
    rep.l_s1 = rep.l_d + cfg.lambda * rep.l_c;
    rep.l_s2 = rep.l_f + cfg.lambda * rep.l_c;
    result.trace.push_back(rep);

    Eigen::VectorXd gvec;
    flatten_grad(g, idx, grad, fine, gvec);
    Eigen::VectorXd v2 = gvec.cwiseProduct(gvec);  // per-parameter scale memory
    double step = cfg.step_size;

    for (int it = 0; it < iters; ++it) {
      if (gvec.norm() < 1e-16) break;
      const Eigen::VectorXd precond =
          (v2.array().sqrt() + 1e-12).inverse().matrix();
      bool accepted = false;
      const FlatState saved = snapshot(g, idx);
      for (int bt = 0; bt < 24; ++bt) {
        const Eigen::VectorXd delta = -step * gvec.cwiseProduct(precond);
        apply_delta(g, idx, delta);
        AlignGrad trial_grad;
        trial_grad.resize_zero(g, idx);
        LossReport trial_rep;
        const double trial_loss = objective(&trial_grad, &trial_rep);
        if (!std::isfinite(trial_loss)) throw DivergedLoss("optimize: loss diverged");
        if (trial_loss < loss) {
          const double rel = (loss - trial_loss) / std::max(loss, 1e-300);
          loss = trial_loss;
          grad = std::move(trial_grad);
          flatten_grad(g, idx, grad, fine, gvec);
          v2 = 0.9 * v2 + 0.1 * gvec.cwiseProduct(gvec);
          step = std::min(step * 1.3, 1e6);
          trial_rep.l_s1 = trial_rep.l_d + cfg.lambda * trial_rep.l_c;
          trial_rep.l_s2 = trial_rep.l_f + cfg.lambda * trial_rep.l_c;
          result.trace.push_back(trial_rep);
          if (trace_file) {
            trace_file << global_iter << ' ' << stage << ' ' << trial_rep.l_d << ' '
                       << trial_rep.l_c << ' ' << trial_rep.l_f << ' ' << loss << '\n';
          }
          ++global_iter;
          accepted = true;
          if (cfg.convergence_tol > 0.0 && rel < cfg.convergence_tol) return;
          break;
        }
        restore(g, idx, saved);
        step *= 0.5;
      }
      if (!accepted) break;
    }
  };

  run_stage(1, cfg.coarse_iters);
  run_stage(2, cfg.fine_iters);
  return result;
}

}  // namespace css
