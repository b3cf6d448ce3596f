#include "css/metrics.hpp"

#include <cmath>

namespace css {

namespace {

void check_dims(const Image& a, const Image& b, const char* who) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionMismatch(std::string(who) + ": image size mismatch");
  }
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_dims(a, b, "psnr");
  const double n = 3.0 * a.r.size();
  const double mse = ((a.r - b.r).squaredNorm() + (a.g - b.g).squaredNorm() +
                      (a.b - b.b).squaredNorm()) /
                     n;
  if (mse <= 0.0) return kPsnrCap;
  const double v = 10.0 * std::log10(1.0 / mse);
  return v > kPsnrCap ? kPsnrCap : v;
}

double ssim(const Image& a, const Image& b) {
  check_dims(a, b, "ssim");
  const int h = a.height(), w = a.width();
  constexpr int win = 8;
  if (h < win || w < win) {
    throw ImageTooSmall("ssim: images smaller than 8x8");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;

  const Grid la = (a.r + a.g + a.b) / 3.0;
  const Grid lb = (b.r + b.g + b.b) / 3.0;

  double acc = 0.0;
  int count = 0;
  const double inv_n = 1.0 / (win * win);
  for (int r0 = 0; r0 + win <= h; ++r0) {
    for (int c0 = 0; c0 + win <= w; ++c0) {
      const auto wa = la.block(r0, c0, win, win);
      const auto wb = lb.block(r0, c0, win, win);
      const double mu_a = wa.sum() * inv_n;
      const double mu_b = wb.sum() * inv_n;
      const double var_a = wa.squaredNorm() * inv_n - mu_a * mu_a;
      const double var_b = wb.squaredNorm() * inv_n - mu_b * mu_b;
      const double cov = wa.cwiseProduct(wb).sum() * inv_n - mu_a * mu_b;
      acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return acc / count;
}

}  // namespace css
