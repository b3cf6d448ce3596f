#pragma once

#include <Eigen/Geometry>

#include "css/types.hpp"

namespace css {

// Pinhole camera, zero skew. Pixel centers sit at integer coordinates,
// (0,0) is the top-left pixel center.
struct Intrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;
};

// World-to-camera rigid transform: X_cam = R * X_world + t.
struct SE3Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static SE3Pose identity() { return SE3Pose{}; }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Vec3 apply(const Vec3& x_world) const { return rotation * x_world + translation; }
  Vec3 camera_center() const { return rotation.conjugate() * (-translation); }
  void renormalize() { rotation.normalize(); }
};

// Per-pixel 3D points in the owning view's camera frame. Invalid entries
// must never be read by consumers.
struct PointMap {
  Grid x, y, z;
  BoolGrid valid;

  PointMap() = default;
  PointMap(int height, int width)
      : x(Grid::Zero(height, width)),
        y(Grid::Zero(height, width)),
        z(Grid::Zero(height, width)),
        valid(BoolGrid::Constant(height, width, false)) {}

  int height() const { return static_cast<int>(x.rows()); }
  int width() const { return static_cast<int>(x.cols()); }

  Vec3 at(int row, int col) const { return Vec3(x(row, col), y(row, col), z(row, col)); }
  void set(int row, int col, const Vec3& p) {
    x(row, col) = p.x();
    y(row, col) = p.y();
    z(row, col) = p.z();
  }
};

struct ConfidenceMap {
  Grid values;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
};

inline constexpr double kDepthEpsilon = 1e-9;

// Perspective projection of a world point; throws BehindCamera when the
// camera-frame depth is not positive.
Vec2 project(const Intrinsics& K, const SE3Pose& P, const Vec3& x_world);

// Inverse of project for the identity pose: pixel + depth -> camera-frame point.
Vec3 unproject(const Intrinsics& K, const Vec2& pixel, double depth);

SE3Pose se3_compose(const SE3Pose& a, const SE3Pose& b);
SE3Pose se3_invert(const SE3Pose& p);

// theta measured from +z, phi = atan2(y, x). Input normalized internally;
// throws ZeroVector below 1e-12 norm.
void dir_to_spherical(const Vec3& d, double& theta, double& phi);

Vec3 spherical_to_dir(double theta, double phi);

}  // namespace css
