#pragma once

#include <Eigen/Geometry>
#include <vector>

#include "css/view.hpp"

namespace css {

// One 3D Gaussian: mean, rotation * diag(scales^2) * rotation^T covariance,
// per-channel reflectance weight. No opacity; rendering is a plain weighted
// sum of projected Gaussians.
struct Splat {
  Vec3 mean = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 scales = Vec3::Zero();  // sorted descending
  Vec3 weight = Vec3::Zero();

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Mat3 covariance() const {
    const Mat3 v = rotation_matrix();
    return v * scales.cwiseProduct(scales).asDiagonal() * v.transpose();
  }
};

struct SplatSet {
  std::vector<Splat> splats;
  double scene_scale = 1.0;  // bounding-sphere diameter
};

struct GinitConfig {
  double conf_threshold = 0.5;
  int seed_stride = 2;
  double floor_fraction = 1e-4;  // scale floor = floor_fraction * scene_scale
};

// Mean-centered 1/N sample covariance of the 3x3 pixel window around u,
// border-clamped, valid pixels only. Throws TooFewPoints below 3 neighbors.
Mat3 neighborhood_cov(const PointMap& pm, int row, int col);

// Clamps singular values into [max(min(s), floor), median(s)], re-sorted
// descending; every output is at least `floor`.
Vec3 clip_scales(const Vec3& s_desc, double floor);

// Eigendecomposition of a symmetric PSD covariance with deterministic signs;
// values sorted descending, scales are the sqrt of the eigenvalues.
void splat_decompose(const Mat3& cov, Mat3& rotation, Vec3& scales_desc);

// One splat per confident, unmasked, stride-sampled pixel of every view,
// means in world frame, weight = image color.
SplatSet init_splats(const std::vector<ViewRecord>& views, const GinitConfig& cfg);

}  // namespace css
