#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "css/ginit.hpp"
#include "css/rng.hpp"
#include "css/synth.hpp"
#include "fixtures.hpp"

using namespace css;

namespace {

PointMap random_pointmap(Rng& rng, int h, int w, double valid_prob) {
  PointMap pm(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (rng.uniform() < valid_prob) {
        pm.set(r, c, rng.normal3());
        pm.valid(r, c) = true;
      }
    }
  }
  return pm;
}

// direct reimplementation of the 3x3 mean-centered 1/N covariance
Mat3 cov_oracle(const PointMap& pm, int row, int col) {
  Vec3 mean = Vec3::Zero();
  int n = 0;
  for (int r = std::max(0, row - 1); r <= std::min(pm.height() - 1, row + 1); ++r) {
    for (int c = std::max(0, col - 1); c <= std::min(pm.width() - 1, col + 1); ++c) {
      if (!pm.valid(r, c)) continue;
      mean += pm.at(r, c);
      ++n;
    }
  }
  mean /= n;
  Mat3 cov = Mat3::Zero();
  for (int r = std::max(0, row - 1); r <= std::min(pm.height() - 1, row + 1); ++r) {
    for (int c = std::max(0, col - 1); c <= std::min(pm.width() - 1, col + 1); ++c) {
      if (!pm.valid(r, c)) continue;
      const Vec3 d = pm.at(r, c) - mean;
      cov += d * d.transpose();
    }
  }
  return cov / n;
}

}  // namespace

TEST_CASE("neighborhood covariance matches a direct reimplementation") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const PointMap pm = random_pointmap(rng, 8, 9, 0.8);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 9; ++c) {
        int n = 0;
        for (int rr = std::max(0, r - 1); rr <= std::min(7, r + 1); ++rr) {
          for (int cc = std::max(0, c - 1); cc <= std::min(8, c + 1); ++cc) {
            if (pm.valid(rr, cc)) ++n;
          }
        }
        if (n < 3) {
          CHECK_THROWS_AS(neighborhood_cov(pm, r, c), TooFewPoints);
        } else {
          CHECK((neighborhood_cov(pm, r, c) - cov_oracle(pm, r, c)).norm() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("scale clipping squeezes into [max(min, floor), median]") {
  const Vec3 a = clip_scales(Vec3(3, 2, 1), 0.0);
  CHECK(a.isApprox(Vec3(2, 2, 1)));

  // degenerate spectrum collapses onto the floor
  const Vec3 b = clip_scales(Vec3(5, 0, 0), 1e-3);
  CHECK(b.isApprox(Vec3(1e-3, 1e-3, 1e-3)));

  // already inside the band: only the largest moves
  const Vec3 c = clip_scales(Vec3(10, 4, 3), 1.0);
  CHECK(c.isApprox(Vec3(4, 4, 3)));

  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    Vec3 s(rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 4));
    std::sort(s.data(), s.data() + 3, std::greater<double>());
    const double floor = rng.uniform(0, 0.5);
    const Vec3 out = clip_scales(s, floor);
    CHECK(out[0] >= out[1]);
    CHECK(out[1] >= out[2]);
    CHECK(out[2] >= floor - 1e-15);
    CHECK(out[0] <= std::max(s[1], std::max(s[2], floor)) + 1e-15);
  }
}

TEST_CASE("splat_decompose returns a proper rotation and recovers the covariance") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Mat3 a = Mat3::NullaryExpr([&](int, int) { return rng.normal(); });
    const Mat3 cov = a * a.transpose();
    Mat3 rot;
    Vec3 scales;
    splat_decompose(cov, rot, scales);
    CHECK((rot * rot.transpose() - Mat3::Identity()).norm() < 1e-10);
    CHECK(rot.determinant() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(scales[0] >= scales[1]);
    CHECK(scales[1] >= scales[2]);
    const Mat3 back = rot * scales.cwiseProduct(scales).asDiagonal() * rot.transpose();
    CHECK((back - cov).norm() < 1e-9 * std::max(1.0, cov.norm()));
  }
}

TEST_CASE("clipped covariances satisfy the spectrum bounds") {
  Rng rng(4);
  const double floor = 0.01;
  for (int i = 0; i < 2000; ++i) {
    const PointMap pm = random_pointmap(rng, 4, 4, 1.0);
    const Mat3 cov = neighborhood_cov(pm, 1, 1);
    Mat3 rot;
    Vec3 s;
    splat_decompose(cov, rot, s);
    const double median = s[1];
    const Vec3 clipped = clip_scales(s, floor);
    const Mat3 sigma = rot * clipped.cwiseProduct(clipped).asDiagonal() * rot.transpose();

    CHECK((sigma - sigma.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat3> es(sigma);
    CHECK(es.eigenvalues().minCoeff() >= floor * floor * (1.0 - 1e-6));
    CHECK(es.eigenvalues().maxCoeff() <=
          std::max(median, std::max(s[2], floor)) * std::max(median, std::max(s[2], floor)) +
              1e-9);
  }
}

TEST_CASE("init_splats seeds confident unmasked pixels with image colors") {
  SynthOptions opts;
  opts.image_width = 48;
  opts.image_height = 36;
  opts.focal = 50.0;
  const Scene scene = gen_scene(17, 30, 3, opts);
  SynthDataset ds = gen_views(scene, NoiseSpec{});
  for (auto& v : ds.views) {
    v.mask = Mask::all_true(v.height(), v.width());
    v.points_opt = v.points_init;
  }
  GinitConfig cfg;
  cfg.conf_threshold = 0.5;  // synthetic valid pixels carry confidence 1.0
  const SplatSet set = init_splats(ds.views, cfg);
  CHECK(set.splats.size() > 50);
  CHECK(set.scene_scale > 0.5);
  const double floor = cfg.floor_fraction * set.scene_scale;
  for (const auto& s : set.splats) {
    CHECK(s.mean.allFinite());
    CHECK(s.scales[2] >= floor * (1.0 - 1e-9));
    CHECK(s.weight.minCoeff() >= 0.0);
  }

  // masking everything out leaves nothing to seed
  for (auto& v : ds.views) v.mask.values.setConstant(false);
  CHECK_THROWS_AS(init_splats(ds.views, cfg), EmptySplatSet);
}
