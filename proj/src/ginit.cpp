#include "css/ginit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace css {

Mat3 neighborhood_cov(const PointMap& pm, int row, int col) {
  const int h = pm.height(), w = pm.width();
  const int r0 = std::max(0, row - 1), r1 = std::min(h - 1, row + 1);
  const int c0 = std::max(0, col - 1), c1 = std::min(w - 1, col + 1);
  Vec3 mean = Vec3::Zero();
  int n = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!pm.valid(r, c)) continue;
      mean += pm.at(r, c);
      ++n;
    }
  }
  if (n < 3) {
    throw TooFewPoints("neighborhood_cov: only " + std::to_string(n) + " valid neighbors");
  }
  mean /= n;
  Mat3 cov = Mat3::Zero();
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!pm.valid(r, c)) continue;
      const Vec3 d = pm.at(r, c) - mean;
      cov += d * d.transpose();
    }
  }
  return cov / n;
}

Vec3 clip_scales(const Vec3& s_desc, double floor) {
  const double median = s_desc[1];
  const double lo = std::max(s_desc[2], floor);
  const double hi = std::max(median, lo);
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = std::clamp(s_desc[i], lo, hi);
  }
  std::sort(out.data(), out.data() + 3, std::greater<double>());
  return out;
}

void splat_decompose(const Mat3& cov, Mat3& rotation, Vec3& scales_desc) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  // ascending -> descending
  Mat3 v;
  Vec3 ev;
  for (int i = 0; i < 3; ++i) {
    ev[i] = std::max(0.0, es.eigenvalues()[2 - i]);
    v.col(i) = es.eigenvectors().col(2 - i);
  }
  // deterministic sign: first component of magnitude > tol positive
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(v(k, i)) > 1e-12) {
        if (v(k, i) < 0.0) v.col(i) = -v.col(i);
        break;
      }
    }
  }
  if (v.determinant() < 0.0) v.col(2) = -v.col(2);
  rotation = v;
  scales_desc = ev.cwiseSqrt();
}

SplatSet init_splats(const std::vector<ViewRecord>& views, const GinitConfig& cfg) {
  // pass 1: collect seed pixels and world-frame means for the scene scale
  struct Seed {
    int view, row, col;
    Vec3 mean_world;
  };
  std::vector<Seed> seeds;
  for (size_t vi = 0; vi < views.size(); ++vi) {
    const ViewRecord& view = views[vi];
    const PointMap& pm = view.points_opt;
    const SE3Pose cam_to_world = se3_invert(view.pose_opt);
    const bool have_mask = view.mask.values.size() > 0;
    for (int r = 0; r < pm.height(); r += cfg.seed_stride) {
      for (int c = 0; c < pm.width(); c += cfg.seed_stride) {
        if (!pm.valid(r, c)) continue;
        if (view.confidence.values(r, c) < cfg.conf_threshold) continue;
        if (have_mask && !view.mask.values(r, c)) continue;
        seeds.push_back({static_cast<int>(vi), r, c, cam_to_world.apply(pm.at(r, c))});
      }
    }
  }
  if (seeds.empty()) {
    throw EmptySplatSet("init_splats: no pixel passed confidence/mask");
  }

  Vec3 centroid = Vec3::Zero();
  for (const auto& s : seeds) centroid += s.mean_world;
  centroid /= static_cast<double>(seeds.size());
  double radius = 0.0;
  for (const auto& s : seeds) radius = std::max(radius, (s.mean_world - centroid).norm());

  SplatSet set;
  set.scene_scale = std::max(2.0 * radius, 1e-12);
  const double floor = cfg.floor_fraction * set.scene_scale;

  for (const auto& seed : seeds) {
    const ViewRecord& view = views[seed.view];
    Mat3 cov_cam;
    try {
      cov_cam = neighborhood_cov(view.points_opt, seed.row, seed.col);
    } catch (const TooFewPoints&) {
      continue;
    }
    const Mat3 r_wc = se3_invert(view.pose_opt).rotation_matrix();
    const Mat3 cov_world = r_wc * cov_cam * r_wc.transpose();

    Splat sp;
    Mat3 rot;
    Vec3 scales;
    splat_decompose(cov_world, rot, scales);
    sp.mean = seed.mean_world;
    sp.rotation = Eigen::Quaterniond(rot).normalized();
    sp.scales = clip_scales(scales, floor);
    sp.weight = view.image.at(seed.row, seed.col);
    set.splats.push_back(sp);
  }
  if (set.splats.empty()) {
    throw EmptySplatSet("init_splats: all seeds had degenerate neighborhoods");
  }
  return set;
}

}  // namespace css
