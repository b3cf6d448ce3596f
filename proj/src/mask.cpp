#include "css/mask.hpp"

#include <vector>

namespace css {

Mask threshold_mask(const ConfidenceMap& c, double tau) {
  Mask m;
  m.values = (c.values.array() >= tau);
  return m;
}

double otsu_threshold(const ConfidenceMap& c, int bins) {
  const double lo = c.values.minCoeff();
  const double hi = c.values.maxCoeff();
  if (!(hi > lo)) {
    throw DegenerateMap("otsu_threshold: constant confidence map");
  }
  const double bin_width = (hi - lo) / bins;

  std::vector<int64_t> hist(bins, 0);
  for (int rr = 0; rr < c.height(); ++rr) {
    for (int cc = 0; cc < c.width(); ++cc) {
      int bi = static_cast<int>((c.values(rr, cc) - lo) / bin_width);
      if (bi >= bins) bi = bins - 1;
      hist[bi] += 1;
    }
  }

  const double total = static_cast<double>(c.values.size());
  double sum_all = 0.0;
  for (int i = 0; i < bins; ++i) {
    sum_all += (i + 0.5) * static_cast<double>(hist[i]);
  }

  double w0 = 0.0, sum0 = 0.0;
  double best_var = -1.0;
  int best_t = 0;
  for (int t = 0; t < bins - 1; ++t) {
    w0 += static_cast<double>(hist[t]);
    sum0 += (t + 0.5) * static_cast<double>(hist[t]);
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return lo + (best_t + 1) * bin_width;
}

}  // namespace css
