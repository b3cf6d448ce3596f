#include "css/geom.hpp"

#include <cmath>

namespace css {

Vec2 project(const Intrinsics& K, const SE3Pose& P, const Vec3& x_world) {
  const Vec3 xc = P.apply(x_world);
  if (xc.z() <= kDepthEpsilon) {
    throw BehindCamera("project: point at depth " + std::to_string(xc.z()));
  }
  return Vec2(K.fx * xc.x() / xc.z() + K.cx, K.fy * xc.y() / xc.z() + K.cy);
}

Vec3 unproject(const Intrinsics& K, const Vec2& pixel, double depth) {
  if (depth <= 0.0) {
    throw NonPositiveDepth("unproject: depth " + std::to_string(depth));
  }
  return Vec3((pixel.x() - K.cx) / K.fx * depth, (pixel.y() - K.cy) / K.fy * depth, depth);
}

SE3Pose se3_compose(const SE3Pose& a, const SE3Pose& b) {
  // (a ∘ b)(x) = a(b(x))
  SE3Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  out.renormalize();
  return out;
}

SE3Pose se3_invert(const SE3Pose& p) {
  SE3Pose out;
  out.rotation = p.rotation.conjugate();
  out.translation = -(out.rotation * p.translation);
  out.renormalize();
  return out;
}

void dir_to_spherical(const Vec3& d, double& theta, double& phi) {
  const double n = d.norm();
  if (n < 1e-12) {
    throw ZeroVector("dir_to_spherical: zero direction");
  }
  const Vec3 u = d / n;
  double cz = u.z();
  if (cz > 1.0) cz = 1.0;
  if (cz < -1.0) cz = -1.0;
  theta = std::acos(cz);
  phi = (std::abs(u.x()) < 1e-300 && std::abs(u.y()) < 1e-300) ? 0.0 : std::atan2(u.y(), u.x());
}

Vec3 spherical_to_dir(double theta, double phi) {
  const double st = std::sin(theta);
  return Vec3(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
}

}  // namespace css
