#include "css/illum.hpp"

#include <cmath>

namespace css {

namespace {

// Associated Legendre P_l^m(x) without the Condon-Shortley phase, by the
// standard upward recurrence.
double legendre_p(int l, int m, double x) {
  double pmm = 1.0;
  if (m > 0) {
    const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double fact = 1.0;
    for (int i = 1; i <= m; ++i) {
      pmm *= fact * somx2;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

double sh_norm(int l, int m) {
  // sqrt((2l+1)/(4pi) * (l-m)!/(l+m)!), m >= 0
  double ratio = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) ratio *= k;
  return std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) / ratio);
}

}  // namespace

double sh_basis(int l, int m, double theta, double phi) {
  if (l < 0 || l > kMaxShOrder || m < -l || m > l) {
    throw IndexOutOfRange("sh_basis: (l,m)=(" + std::to_string(l) + "," + std::to_string(m) + ")");
  }
  const double ct = std::cos(theta);
  if (m == 0) return sh_norm(l, 0) * legendre_p(l, 0, ct);
  const int am = m > 0 ? m : -m;
  const double k = std::sqrt(2.0) * sh_norm(l, am) * legendre_p(l, am, ct);
  return m > 0 ? k * std::cos(am * phi) : k * std::sin(am * phi);
}

void sh_basis_all(int order, double theta, double phi, std::vector<double>& out) {
  out.resize(sh_coeff_count(order));
  for (int l = 0; l <= order; ++l) {
    for (int m = -l; m <= l; ++m) {
      out[l * l + l + m] = sh_basis(l, m, theta, phi);
    }
  }
}

Vec3 eval_illum_pre(const SHLight& light, double theta, double phi,
                    std::vector<double>& basis_scratch) {
  sh_basis_all(light.order, theta, phi, basis_scratch);
  Eigen::Map<const Eigen::VectorXd> y(basis_scratch.data(), basis_scratch.size());
  return light.coeffs * y;
}

Vec3 eval_illum(const SHLight& light, double theta, double phi) {
  std::vector<double> scratch;
  const Vec3 pre = eval_illum_pre(light, theta, phi, scratch);
  return Vec3(softplus(pre.x()), softplus(pre.y()), softplus(pre.z()));
}

BakedEnvMap bake(const SHLight& light, int height, int width) {
  BakedEnvMap env;
  env.height = height;
  env.width = width;
  env.texels.resize(3, height * width);
  for (int r = 0; r < height; ++r) {
    const double theta = (r + 0.5) * M_PI / height;
    for (int c = 0; c < width; ++c) {
      const double phi = (c + 0.5) * 2.0 * M_PI / width - M_PI;
      env.texels.col(r * width + c) = eval_illum(light, theta, phi);
    }
  }
  return env;
}

Vec3 BakedEnvMap::lookup(double theta, double phi) const {
  // texel centers at theta=(r+0.5)pi/H, phi=(c+0.5)2pi/W - pi
  double rf = theta * height / M_PI - 0.5;
  double cf = (phi + M_PI) * width / (2.0 * M_PI) - 0.5;
  if (rf < 0.0) rf = 0.0;
  if (rf > height - 1.0) rf = height - 1.0;
  const int r0 = static_cast<int>(std::floor(rf));
  const int r1 = std::min(r0 + 1, height - 1);
  const double ar = rf - r0;
  // wrap in phi
  double cw = cf - std::floor(cf / width) * width;
  const int c0 = static_cast<int>(std::floor(cw)) % width;
  const int c1 = (c0 + 1) % width;
  const double ac = cw - std::floor(cw);
  return (1.0 - ar) * ((1.0 - ac) * texel(r0, c0) + ac * texel(r0, c1)) +
         ar * ((1.0 - ac) * texel(r1, c0) + ac * texel(r1, c1));
}

double fit_loss_and_grad(const SHLight& light, const std::vector<ShTarget>& targets,
                         Eigen::MatrixXd& grad) {
  grad = Eigen::MatrixXd::Zero(3, sh_coeff_count(light.order));
  double loss = 0.0;
  std::vector<double> basis;
  for (const auto& t : targets) {
    const Vec3 pre = eval_illum_pre(light, t.theta, t.phi, basis);
    Eigen::Map<const Eigen::VectorXd> y(basis.data(), basis.size());
    for (int ch = 0; ch < 3; ++ch) {
      const double val = softplus(pre[ch]);
      const double res = val - t.radiance[ch];
      loss += res * res;
      grad.row(ch) += (2.0 * res * sigmoid(pre[ch])) * y.transpose();
    }
  }
  return loss;
}

SHLight fit_coeffs(const SHLight& init, const std::vector<ShTarget>& targets, int iters,
                   double step_size) {
  SHLight light = init;
  Eigen::MatrixXd grad;
  double loss = fit_loss_and_grad(light, targets, grad);
  double step = step_size;
  for (int it = 0; it < iters; ++it) {
    const double gnorm = grad.norm();
    if (gnorm < 1e-15) break;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      SHLight trial = light;
      trial.coeffs -= (step / gnorm) * grad;
      Eigen::MatrixXd trial_grad;
      const double trial_loss = fit_loss_and_grad(trial, targets, trial_grad);
      if (trial_loss < loss) {
        light = trial;
        loss = trial_loss;
        grad = trial_grad;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return light;
}

}  // namespace css
