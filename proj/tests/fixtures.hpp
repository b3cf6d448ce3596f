#pragma once

// Shared random-scene builders for the unit tests.

#include "css/render.hpp"
#include "css/rng.hpp"
#include "css/view.hpp"

namespace fixtures {

inline css::Intrinsics make_intrinsics(int width, int height, double f) {
  css::Intrinsics k;
  k.fx = f;
  k.fy = f * 1.05;
  k.cx = (width - 1) * 0.5;
  k.cy = (height - 1) * 0.5;
  k.width = width;
  k.height = height;
  return k;
}

// camera on a sphere of the given radius, z axis through the origin
inline css::SE3Pose make_pose(css::Rng& rng, double radius) {
  const css::Vec3 pos = radius * rng.unit_vector();
  const css::Vec3 fwd = (-pos).normalized();
  css::Vec3 up(0, 0, 1);
  if (std::abs(fwd.dot(up)) > 0.99) up = css::Vec3(0, 1, 0);
  const css::Vec3 right = up.cross(fwd).normalized();
  const css::Vec3 down = fwd.cross(right);
  css::Mat3 r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = fwd;
  css::SE3Pose p;
  p.rotation = Eigen::Quaterniond(r).normalized();
  p.translation = -(r * pos);
  return p;
}

inline css::Splat make_splat(css::Rng& rng, double scale_lo = 0.05, double scale_hi = 0.3) {
  css::Splat s;
  s.mean = rng.unit_vector() * rng.uniform(0.0, 1.0);
  s.rotation =
      Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(0, M_PI), rng.unit_vector())).normalized();
  css::Vec3 sc(rng.uniform(scale_lo, scale_hi), rng.uniform(scale_lo, scale_hi),
               rng.uniform(scale_lo, scale_hi));
  std::sort(sc.data(), sc.data() + 3, std::greater<double>());
  s.scales = sc;
  s.weight = css::Vec3(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0));
  return s;
}

inline css::SplatSet make_splat_set(css::Rng& rng, int n, double scale_lo = 0.05,
                                    double scale_hi = 0.3) {
  css::SplatSet set;
  set.scene_scale = 2.0;
  for (int i = 0; i < n; ++i) set.splats.push_back(make_splat(rng, scale_lo, scale_hi));
  return set;
}

// view with an arbitrary target image, mostly-true mask and a partially valid
// point map — enough structure to exercise every gradient path
inline css::ViewRecord make_view(css::Rng& rng, int width, int height, double focal,
                                 double radius = 3.0) {
  css::ViewRecord v;
  v.intrinsics_init = v.intrinsics_opt = make_intrinsics(width, height, focal);
  v.pose_init = v.pose_opt = make_pose(rng, radius);
  v.image = css::Image(height, width);
  v.mask = css::Mask::all_true(height, width);
  v.points_init = css::PointMap(height, width);
  v.confidence.values = css::Grid::Zero(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      v.image.set(r, c, css::Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
      if (rng.uniform() < 0.85) {
        v.points_init.set(r, c, css::unproject(v.intrinsics_opt, css::Vec2(c, r),
                                               rng.uniform(radius - 1.0, radius + 1.0)));
        v.points_init.valid(r, c) = true;
      }
      if (rng.uniform() < 0.15) v.mask.values(r, c) = false;
      v.confidence.values(r, c) = rng.uniform(0.2, 1.0);
    }
  }
  v.points_opt = v.points_init;
  v.light = css::SHLight::zero(0);
  return v;
}

}  // namespace fixtures
