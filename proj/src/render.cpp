#include "css/render.hpp"

#include <cmath>
#include <thread>

namespace css {

namespace {

struct FlooredCov {
  Mat2 cov;          // eigenvalue-clamped result
  bool bound = false;
  double lam0 = 0.0, lam1 = 0.0;  // raw eigenvalues, lam0 >= lam1
  Vec2 ev0 = Vec2(1, 0);
};

FlooredCov floor_eigenvalues(const Mat2& sym, double floor) {
  // closed-form 2x2 symmetric eigendecomposition
  const double a = sym(0, 0), b = sym(0, 1), c = sym(1, 1);
  const double tr = a + c;
  const double det_disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
  FlooredCov out;
  out.lam0 = 0.5 * tr + det_disc;
  out.lam1 = 0.5 * tr - det_disc;
  if (std::abs(b) > 1e-300) {
    out.ev0 = Vec2(out.lam0 - c, b).normalized();
  } else {
    out.ev0 = a >= c ? Vec2(1, 0) : Vec2(0, 1);
  }
  if (out.lam0 >= floor && out.lam1 >= floor) {
    out.cov = sym;
    return out;
  }
  out.bound = true;
  const Vec2 v1(-out.ev0.y(), out.ev0.x());
  const double l0 = std::max(out.lam0, floor);
  const double l1 = std::max(out.lam1, floor);
  out.cov = l0 * out.ev0 * out.ev0.transpose() + l1 * v1 * v1.transpose();
  return out;
}

// Adjoint of the eigenvalue clamp: maps d(loss)/d(clamped cov) back to
// d(loss)/d(raw cov). Diagonal entries in the raw eigenbasis pass through only
// where the floor is inactive; the off-diagonal picks up the divided
// difference of the clamp.
Mat2 floor_backward(const FlooredCov& fc, double floor, const Mat2& g) {
  if (!fc.bound) return g;
  Mat2 v;
  v.col(0) = fc.ev0;
  v.col(1) = Vec2(-fc.ev0.y(), fc.ev0.x());
  Mat2 gp = v.transpose() * g * v;
  const double c0 = fc.lam0 > floor ? 1.0 : 0.0;
  const double c1 = fc.lam1 > floor ? 1.0 : 0.0;
  double k;
  if (std::abs(fc.lam0 - fc.lam1) > 1e-12) {
    k = (std::max(fc.lam0, floor) - std::max(fc.lam1, floor)) / (fc.lam0 - fc.lam1);
  } else {
    k = c0;
  }
  gp(0, 0) *= c0;
  gp(1, 1) *= c1;
  gp(0, 1) *= k;
  gp(1, 0) *= k;
  return v * gp * v.transpose();
}

struct SplatScreen {
  bool visible = false;
  Vec2 mean2d;
  Mat2 cov2d;
  Mat2 inv_cov;
  Vec3 mu_cam;
  FlooredCov fcov;
  Eigen::Matrix<double, 2, 3> jac;
  int row_lo = 0, row_hi = -1, col_lo = 0, col_hi = -1;
  double cutoff2 = 0.0;
};

SplatScreen prepare_splat(const Splat& s, const Intrinsics& K, const SE3Pose& P, int height,
                          int width, double cutoff_sigmas) {
  SplatScreen sc;
  const Vec3 mu_cam = P.apply(s.mean);
  if (mu_cam.z() <= kNearPlane) return sc;
  const double z = mu_cam.z();
  sc.mu_cam = mu_cam;
  sc.mean2d = Vec2(K.fx * mu_cam.x() / z + K.cx, K.fy * mu_cam.y() / z + K.cy);

  Eigen::Matrix<double, 2, 3> jac;
  jac << K.fx / z, 0.0, -K.fx * mu_cam.x() / (z * z),
         0.0, K.fy / z, -K.fy * mu_cam.y() / (z * z);
  sc.jac = jac;

  const Mat3 w = P.rotation_matrix();
  const Mat3 cov_cam = w * s.covariance() * w.transpose();
  Mat2 cov2d = jac * cov_cam * jac.transpose();
  cov2d = Mat2(0.5 * (cov2d + cov2d.transpose()));
  sc.fcov = floor_eigenvalues(cov2d, kCovFloor2d);
  cov2d = sc.fcov.cov;
  sc.cov2d = cov2d;
  const double det = cov2d.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) return sc;
  sc.inv_cov = cov2d.inverse();

  const double radius =
      cutoff_sigmas * std::sqrt(std::max(cov2d(0, 0), cov2d(1, 1)) * 2.0);
  sc.col_lo = std::max(0, static_cast<int>(std::floor(sc.mean2d.x() - radius)));
  sc.col_hi = std::min(width - 1, static_cast<int>(std::ceil(sc.mean2d.x() + radius)));
  sc.row_lo = std::max(0, static_cast<int>(std::floor(sc.mean2d.y() - radius)));
  sc.row_hi = std::min(height - 1, static_cast<int>(std::ceil(sc.mean2d.y() + radius)));
  sc.cutoff2 = cutoff_sigmas * cutoff_sigmas;
  sc.visible = sc.row_lo <= sc.row_hi && sc.col_lo <= sc.col_hi;
  return sc;
}

void parallel_rows(int height, int threads, const std::function<void(int, int)>& fn) {
  if (threads <= 1 || height < 2) {
    fn(0, height);
    return;
  }
  const int n = std::min(threads, height);
  std::vector<std::thread> pool;
  const int chunk = (height + n - 1) / n;
  for (int t = 0; t < n; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(height, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::optional<ProjectedSplat> project_splat(const Splat& s, const Intrinsics& K,
                                            const SE3Pose& P) {
  const SplatScreen sc = prepare_splat(s, K, P, K.height, K.width, 3.0);
  if (P.apply(s.mean).z() <= kNearPlane) return std::nullopt;
  return ProjectedSplat{sc.mean2d, sc.cov2d};
}

Image render_reflectance(const SplatSet& splats, const Intrinsics& K, const SE3Pose& P,
                         int height, int width, const RenderConfig& cfg) {
  Image out(height, width, cfg.background);
  std::vector<SplatScreen> screens(splats.splats.size());
  for (size_t j = 0; j < splats.splats.size(); ++j) {
    screens[j] = prepare_splat(splats.splats[j], K, P, height, width, cfg.cutoff_sigmas);
  }
  parallel_rows(height, cfg.threads, [&](int row_begin, int row_end) {
    for (size_t j = 0; j < screens.size(); ++j) {
      const SplatScreen& sc = screens[j];
      if (!sc.visible) continue;
      const Vec3& w = splats.splats[j].weight;
      const int r0 = std::max(sc.row_lo, row_begin);
      const int r1 = std::min(sc.row_hi, row_end - 1);
      for (int r = r0; r <= r1; ++r) {
        for (int c = sc.col_lo; c <= sc.col_hi; ++c) {
          const Vec2 d(c - sc.mean2d.x(), r - sc.mean2d.y());
          const double m2 = d.dot(sc.inv_cov * d);
          if (m2 > sc.cutoff2) continue;
          const double g = std::exp(-0.5 * m2);
          out.r(r, c) += w.x() * g;
          out.g(r, c) += w.y() * g;
          out.b(r, c) += w.z() * g;
        }
      }
    }
  });
  return out;
}

Image eval_view_illumination(const SHLight& light, const ViewRecord& view) {
  const int h = view.height(), w = view.width();
  Image out(h, w);
  const bool have_pm =
      view.points_opt.height() == h && view.points_opt.width() == w;
  std::vector<double> basis;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      Vec3 x;
      if (have_pm && view.points_opt.valid(r, c)) {
        x = view.points_opt.at(r, c);
      } else {
        x = unproject(view.intrinsics_opt, Vec2(c, r), 1.0);
      }
      double theta, phi;
      dir_to_spherical(x, theta, phi);
      const Vec3 pre = eval_illum_pre(light, theta, phi, basis);
      out.set(r, c, Vec3(softplus(pre.x()), softplus(pre.y()), softplus(pre.z())));
    }
  }
  return out;
}

RenderedView compose(const Image& reflectance, const SHLight& light, const ViewRecord& view) {
  RenderedView rv;
  rv.reflectance = reflectance;
  rv.illumination = eval_view_illumination(light, view);
  rv.composed.r = rv.reflectance.r.cwiseProduct(rv.illumination.r);
  rv.composed.g = rv.reflectance.g.cwiseProduct(rv.illumination.g);
  rv.composed.b = rv.reflectance.b.cwiseProduct(rv.illumination.b);
  return rv;
}

double photometric_loss_and_grad(const SplatSet& splats, const std::vector<ViewRecord>& views,
                                 const std::vector<SHLight>& lights,
                                 const RenderConfig& cfg, RenderGrad* grad) {
  const size_t n_splats = splats.splats.size();
  if (grad) {
    grad->d_weight.assign(n_splats, Vec3::Zero());
    grad->d_mean.assign(n_splats, Vec3::Zero());
    grad->d_scales.assign(n_splats, Vec3::Zero());
    grad->d_rotation.assign(n_splats, Vec3::Zero());
    grad->d_sh.clear();
    for (const auto& li : lights) {
      grad->d_sh.push_back(Eigen::MatrixXd::Zero(3, sh_coeff_count(li.order)));
    }
  }

  double mask_total = 0.0;
  for (const auto& view : views) {
    mask_total += static_cast<double>(view.mask.values.count());
  }
  if (mask_total <= 0.0) return 0.0;

  double loss = 0.0;
  std::vector<double> basis;
  const Mat3 e0 = (Mat3() << 0, 0, 0, 0, 0, -1, 0, 1, 0).finished();
  const Mat3 e1 = (Mat3() << 0, 0, 1, 0, 0, 0, -1, 0, 0).finished();
  const Mat3 e2 = (Mat3() << 0, -1, 0, 1, 0, 0, 0, 0, 0).finished();

  for (size_t vi = 0; vi < views.size(); ++vi) {
    const ViewRecord& view = views[vi];
    const int h = view.height(), w = view.width();
    const Intrinsics& K = view.intrinsics_opt;
    const SE3Pose& P = view.pose_opt;

    const Image refl = render_reflectance(splats, K, P, h, w, cfg);
    const Image illum = eval_view_illumination(lights[vi], view);

    // residual scale: d(loss)/d(composed) per pixel/channel
    Image resid(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (!view.mask.values(r, c)) continue;
        const Vec3 diff = illum.at(r, c).cwiseProduct(refl.at(r, c)) - view.image.at(r, c);
        loss += diff.squaredNorm() / mask_total;
        resid.set(r, c, (2.0 / mask_total) * diff);
      }
    }
    if (!grad) continue;

    // SH coefficient gradient
    const bool have_pm = view.points_opt.height() == h && view.points_opt.width() == w;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (!view.mask.values(r, c)) continue;
        Vec3 x;
        if (have_pm && view.points_opt.valid(r, c)) {
          x = view.points_opt.at(r, c);
        } else {
          x = unproject(K, Vec2(c, r), 1.0);
        }
        double theta, phi;
        dir_to_spherical(x, theta, phi);
        const Vec3 pre = eval_illum_pre(lights[vi], theta, phi, basis);
        Eigen::Map<const Eigen::VectorXd> y(basis.data(), basis.size());
        for (int ch = 0; ch < 3; ++ch) {
          const double coef =
              resid.at(r, c)[ch] * refl.at(r, c)[ch] * sigmoid(pre[ch]);
          if (coef != 0.0) grad->d_sh[vi].row(ch) += coef * y.transpose();
        }
      }
    }

    // splat gradients
    const Mat3 wmat = P.rotation_matrix();
    for (size_t j = 0; j < n_splats; ++j) {
      const Splat& sp = splats.splats[j];
      const SplatScreen sc = prepare_splat(sp, K, P, h, w, cfg.cutoff_sigmas);
      if (!sc.visible) continue;

      Vec3 d_w = Vec3::Zero();
      Vec2 d_mu2d = Vec2::Zero();
      Mat2 d_a = Mat2::Zero();  // d loss / d inv_cov
      for (int r = sc.row_lo; r <= sc.row_hi; ++r) {
        for (int c = sc.col_lo; c <= sc.col_hi; ++c) {
          if (!view.mask.values(r, c)) continue;
          const Vec2 d(c - sc.mean2d.x(), r - sc.mean2d.y());
          const double m2 = d.dot(sc.inv_cov * d);
          if (m2 > sc.cutoff2) continue;
          const double g = std::exp(-0.5 * m2);
          Vec3 s;  // d loss / d refl at this pixel
          for (int ch = 0; ch < 3; ++ch) s[ch] = resid.at(r, c)[ch] * illum.at(r, c)[ch];
          const double q = s.dot(sp.weight);
          d_w += s * g;
          d_mu2d += (q * g) * (sc.inv_cov * d);
          d_a += (-0.5 * q * g) * (d * d.transpose());
        }
      }
      const Mat2 d_cov2d =
          floor_backward(sc.fcov, kCovFloor2d, Mat2(-sc.inv_cov * d_a * sc.inv_cov));

      // back through cov2d = J M J^T (M = W Sigma W^T), J depends on mu_cam
      const Mat3 cov_cam = wmat * sp.covariance() * wmat.transpose();
      const double z = sc.mu_cam.z();
      const double fx = K.fx, fy = K.fy;
      Eigen::Matrix<double, 2, 3> dj[3];
      dj[0].setZero();
      dj[0](0, 2) = -fx / (z * z);
      dj[1].setZero();
      dj[1](1, 2) = -fy / (z * z);
      dj[2].setZero();
      dj[2](0, 0) = -fx / (z * z);
      dj[2](0, 2) = 2.0 * fx * sc.mu_cam.x() / (z * z * z);
      dj[2](1, 1) = -fy / (z * z);
      dj[2](1, 2) = 2.0 * fy * sc.mu_cam.y() / (z * z * z);

      Vec3 d_mu_cam = sc.jac.transpose() * d_mu2d;
      for (int k = 0; k < 3; ++k) {
        const Mat2 dcov = dj[k] * cov_cam * sc.jac.transpose() +
                          sc.jac * cov_cam * dj[k].transpose();
        d_mu_cam[k] += (d_cov2d.array() * dcov.array()).sum();
      }
      grad->d_mean[j] += wmat.transpose() * d_mu_cam;

      const Mat3 d_m3 = sc.jac.transpose() * d_cov2d * sc.jac;  // d loss / d cov_cam
      const Mat3 d_sigma = wmat.transpose() * d_m3 * wmat;      // d loss / d world cov

      const Mat3 v = sp.rotation_matrix();
      const Mat3 sigma = sp.covariance();
      for (int k = 0; k < 3; ++k) {
        const double vsv = v.col(k).dot(d_sigma * v.col(k));
        grad->d_scales[j][k] += 2.0 * sp.scales[k] * vsv;
      }
      const Mat3 gens[3] = {e0, e1, e2};
      for (int k = 0; k < 3; ++k) {
        const Mat3 dsig = gens[k] * sigma + sigma * gens[k].transpose();
        grad->d_rotation[j][k] += (d_sigma.array() * dsig.array()).sum();
      }
      grad->d_weight[j] += d_w;
    }
  }
  return loss;
}

TrainResult train(const SplatSet& splats, const std::vector<ViewRecord>& views,
                  const std::vector<SHLight>& lights, const RenderConfig& cfg) {
  TrainResult res;
  res.splats = splats;
  res.lights = lights;

  const double floor = 1e-4 * splats.scene_scale;
  RenderGrad grad;
  double loss = photometric_loss_and_grad(res.splats, views, res.lights, cfg, &grad);
  if (!std::isfinite(loss)) throw DivergedLoss("train: non-finite initial loss");
  res.loss_trace.push_back(loss);
  RenderGrad dir = grad;

  auto apply = [&](const SplatSet& base_splats, const std::vector<SHLight>& base_lights,
                   double step, SplatSet& out_splats, std::vector<SHLight>& out_lights) {
    out_splats = base_splats;
    out_lights = base_lights;
    if (cfg.optimize_splats) {
      for (size_t j = 0; j < out_splats.splats.size(); ++j) {
        Splat& sp = out_splats.splats[j];
        sp.weight -= step * cfg.step_weight * dir.d_weight[j];
        sp.mean -= step * cfg.step_mean * base_splats.scene_scale * dir.d_mean[j];
        sp.scales -= step * cfg.step_scales * dir.d_scales[j];
        for (int k = 0; k < 3; ++k) sp.scales[k] = std::max(sp.scales[k], floor);
        const Vec3 omega = -step * cfg.step_rotation * dir.d_rotation[j];
        const double angle = omega.norm();
        if (angle > 1e-300) {
          sp.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle)) * sp.rotation;
          sp.rotation.normalize();
        }
      }
    }
    if (cfg.optimize_lights) {
      for (size_t vi = 0; vi < out_lights.size(); ++vi) {
        out_lights[vi].coeffs -= step * cfg.step_sh * dir.d_sh[vi];
      }
    }
  };

  // diagonal RMS preconditioning keeps the step size meaningful across the
  // wildly different curvatures of weights, means and SH coefficients
  RenderGrad v2;
  v2.d_weight.assign(res.splats.splats.size(), Vec3::Zero());
  v2.d_mean.assign(res.splats.splats.size(), Vec3::Zero());
  v2.d_scales.assign(res.splats.splats.size(), Vec3::Zero());
  v2.d_rotation.assign(res.splats.splats.size(), Vec3::Zero());
  for (const auto& li : res.lights) {
    v2.d_sh.push_back(Eigen::MatrixXd::Zero(3, sh_coeff_count(li.order)));
  }
  auto precondition = [&]() {
    const double beta = 0.9, eps = 1e-12;
    dir = grad;
    for (size_t j = 0; j < res.splats.splats.size(); ++j) {
      v2.d_weight[j] = beta * v2.d_weight[j] + (1 - beta) * grad.d_weight[j].cwiseAbs2();
      v2.d_mean[j] = beta * v2.d_mean[j] + (1 - beta) * grad.d_mean[j].cwiseAbs2();
      v2.d_scales[j] = beta * v2.d_scales[j] + (1 - beta) * grad.d_scales[j].cwiseAbs2();
      v2.d_rotation[j] = beta * v2.d_rotation[j] + (1 - beta) * grad.d_rotation[j].cwiseAbs2();
      dir.d_weight[j].array() /= v2.d_weight[j].array().sqrt() + eps;
      dir.d_mean[j].array() /= v2.d_mean[j].array().sqrt() + eps;
      dir.d_scales[j].array() /= v2.d_scales[j].array().sqrt() + eps;
      dir.d_rotation[j].array() /= v2.d_rotation[j].array().sqrt() + eps;
    }
    for (size_t vi = 0; vi < res.lights.size(); ++vi) {
      v2.d_sh[vi] = beta * v2.d_sh[vi] + (1 - beta) * grad.d_sh[vi].cwiseAbs2();
      dir.d_sh[vi].array() /= v2.d_sh[vi].array().sqrt() + eps;
    }
  };

  double step = 1.0;
  for (int it = 0; it < cfg.train_iters; ++it) {
    double gmag = 0.0;
    for (const auto& g : grad.d_weight) gmag += g.squaredNorm();
    for (const auto& g : grad.d_mean) gmag += g.squaredNorm();
    for (const auto& g : grad.d_scales) gmag += g.squaredNorm();
    for (const auto& g : grad.d_rotation) gmag += g.squaredNorm();
    for (const auto& g : grad.d_sh) gmag += g.squaredNorm();
    if (gmag < 1e-24) break;
    precondition();

    bool accepted = false;
    for (int bt = 0; bt < 24 && step > 1e-14; ++bt) {
      SplatSet trial_splats;
      std::vector<SHLight> trial_lights;
      apply(res.splats, res.lights, step, trial_splats, trial_lights);
      RenderGrad trial_grad;
      const double trial_loss =
          photometric_loss_and_grad(trial_splats, views, trial_lights, cfg, &trial_grad);
      if (!std::isfinite(trial_loss)) throw DivergedLoss("train: loss diverged");
      if (trial_loss < loss) {
        res.splats = std::move(trial_splats);
        res.lights = std::move(trial_lights);
        grad = std::move(trial_grad);
        loss = trial_loss;
        res.loss_trace.push_back(loss);
        step *= 1.3;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return res;
}

}  // namespace css
