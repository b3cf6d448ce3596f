#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "css/illum.hpp"
#include "css/rng.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

SHLight random_light(Rng& rng, int order, double dc_lo = 0.5, double dc_hi = 2.0) {
  SHLight li = SHLight::zero(order);
  for (int ch = 0; ch < 3; ++ch) {
    li.coeffs(ch, 0) = rng.uniform(dc_lo, dc_hi);
    for (int i = 1; i < sh_coeff_count(order); ++i) li.coeffs(ch, i) = rng.uniform(-1.0, 1.0);
  }
  return li;
}

}  // namespace

TEST_CASE("spherical harmonics are orthonormal up to order 4") {
  const int order = 4;
  const int n = sh_coeff_count(order);
  // accumulate the full Gram matrix in one pass over a 256x512 grid
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> vals;
  const int n_theta = 256, n_phi = 512;
  const double dt = M_PI / n_theta, dp = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = (i + 0.5) * dt;
    const double w = std::sin(theta) * dt * dp;
    for (int j = 0; j < n_phi; ++j) {
      sh_basis_all(order, theta, (j + 0.5) * dp, vals);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) gram(a, b) += w * vals[a] * vals[b];
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const double expected = (a == b) ? 1.0 : 0.0;
      CHECK(std::abs(gram(a, b) - expected) < 1e-3);
    }
  }
}

TEST_CASE("sh_basis_all agrees with per-element sh_basis") {
  Rng rng(1);
  std::vector<double> vals;
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = rng.uniform(0, M_PI), phi = rng.uniform(0, 2 * M_PI);
    sh_basis_all(kMaxShOrder, theta, phi, vals);
    for (int l = 0; l <= kMaxShOrder; ++l) {
      for (int m = -l; m <= l; ++m) {
        CHECK(vals[l * l + l + m] == doctest::Approx(sh_basis(l, m, theta, phi)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("illumination is strictly positive for any coefficients") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    SHLight li = SHLight::zero(kMaxShOrder);
    for (int ch = 0; ch < 3; ++ch) {
      for (int i = 0; i < sh_coeff_count(kMaxShOrder); ++i) {
        li.coeffs(ch, i) = rng.uniform(-5.0, 5.0);
      }
    }
    for (int k = 0; k < 10000; ++k) {
      const Vec3 d = rng.unit_vector();
      double theta, phi;
      dir_to_spherical(d, theta, phi);
      CHECK(eval_illum(li, theta, phi).minCoeff() > 0.0);
    }
  }
}

TEST_CASE("all-zero coefficients give ln 2 in every direction") {
  const SHLight zero = SHLight::zero(3);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec3 d = rng.unit_vector();
    double theta, phi;
    dir_to_spherical(d, theta, phi);
    const Vec3 v = eval_illum(zero, theta, phi);
    for (int ch = 0; ch < 3; ++ch) CHECK(v[ch] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("fit gradient matches finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const SHLight li = random_light(rng, 2);
    std::vector<ShTarget> targets;
    for (int k = 0; k < 40; ++k) {
      ShTarget t;
      t.theta = rng.uniform(0.01, M_PI - 0.01);
      t.phi = rng.uniform(0, 2 * M_PI);
      t.radiance = Vec3(rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2));
      targets.push_back(t);
    }
    Eigen::MatrixXd grad;
    fit_loss_and_grad(li, targets, grad);
    const double h = 1e-6;
    for (int ch = 0; ch < 3; ++ch) {
      for (int i = 0; i < li.coeffs.cols(); ++i) {
        const double fd = oracles::central_diff(
            [&](double x) {
              SHLight t = li;
              t.coeffs(ch, i) = x;
              Eigen::MatrixXd unused;
              return fit_loss_and_grad(t, targets, unused);
            },
            li.coeffs(ch, i), h);
        CHECK(oracles::grad_error(grad(ch, i), fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("coefficient fitting recovers a sampled light") {
  Rng rng(5);
  const SHLight gt = random_light(rng, 2);
  std::vector<ShTarget> targets;
  for (int k = 0; k < 300; ++k) {
    ShTarget t;
    t.theta = rng.uniform(0.01, M_PI - 0.01);
    t.phi = rng.uniform(0, 2 * M_PI);
    t.radiance = eval_illum(gt, t.theta, t.phi);
    targets.push_back(t);
  }
  Eigen::MatrixXd unused;
  const SHLight fitted = fit_coeffs(SHLight::zero(2), targets, 400);
  const double final_loss = fit_loss_and_grad(fitted, targets, unused);
  CHECK(final_loss < 1e-6);
}

TEST_CASE("baked environment maps reproduce point evaluation") {
  Rng rng(6);
  const SHLight li = random_light(rng, 3);
  const BakedEnvMap env = bake(li, 32, 64);
  REQUIRE(env.height == 32);
  REQUIRE(env.width == 64);
  for (int r = 0; r < env.height; r += 5) {
    for (int c = 0; c < env.width; c += 7) {
      const double theta = (r + 0.5) * M_PI / env.height;
      const double phi = (c + 0.5) * 2.0 * M_PI / env.width - M_PI;
      CHECK((env.texel(r, c) - eval_illum(li, theta, phi)).norm() < 1e-12);
      CHECK((env.lookup(theta, phi) - env.texel(r, c)).norm() < 1e-9);
    }
  }
}
