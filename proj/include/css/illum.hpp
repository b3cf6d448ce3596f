#pragma once

#include <vector>

#include "css/types.hpp"

namespace css {

// Real spherical harmonics, graphics normalization, orthonormal over the
// sphere. theta from +z, phi = atan2(y, x).
inline constexpr int kMaxShOrder = 10;

double sh_basis(int l, int m, double theta, double phi);

// Evaluates all (L+1)^2 basis values at one direction, flattened l^2 + l + m.
void sh_basis_all(int order, double theta, double phi, std::vector<double>& out);

inline int sh_coeff_count(int order) { return (order + 1) * (order + 1); }

// Per-view environment light: softplus-rectified SH expansion per channel.
struct SHLight {
  int order = 0;
  // coeffs[channel][l*l + l + m]
  Eigen::MatrixXd coeffs;  // 3 x (order+1)^2

  static SHLight zero(int order) {
    SHLight li;
    li.order = order;
    li.coeffs = Eigen::MatrixXd::Zero(3, sh_coeff_count(order));
    return li;
  }
};

inline double softplus(double x) {
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Strictly positive radiance at a direction.
Vec3 eval_illum(const SHLight& light, double theta, double phi);

// Pre-softplus SH sums per channel (the training path needs these for the
// softplus derivative).
Vec3 eval_illum_pre(const SHLight& light, double theta, double phi,
                    std::vector<double>& basis_scratch);

struct BakedEnvMap {
  int height = 0, width = 0;        // equirectangular grid
  Eigen::MatrixXd texels;           // 3 x (height*width), column = texel r*width+c

  Vec3 texel(int r, int c) const { return texels.col(r * width + c); }
  Vec3 lookup(double theta, double phi) const;  // bilinear
};

BakedEnvMap bake(const SHLight& light, int height, int width);

struct ShTarget {
  double theta, phi;
  Vec3 radiance;
};

// Squared-error objective for coefficient fitting; gradient has the shape of
// light.coeffs.
double fit_loss_and_grad(const SHLight& light, const std::vector<ShTarget>& targets,
                         Eigen::MatrixXd& grad);

SHLight fit_coeffs(const SHLight& init, const std::vector<ShTarget>& targets, int iters,
                   double step_size = 0.5);

}  // namespace css
