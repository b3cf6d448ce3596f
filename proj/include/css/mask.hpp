#pragma once

#include "css/geom.hpp"
#include "css/types.hpp"

namespace css {

// true = keep / scene region, false = occluded.
struct Mask {
  BoolGrid values;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
  static Mask all_true(int height, int width) {
    return Mask{BoolGrid::Constant(height, width, true)};
  }
};

// mask(u) = confidence(u) >= tau
Mask threshold_mask(const ConfidenceMap& c, double tau);

// Otsu's threshold over a `bins`-bucket histogram of [min, max]; returns the
// bucket upper edge maximizing between-class variance, ties toward the lower
// threshold. Throws DegenerateMap when all values are equal.
double otsu_threshold(const ConfidenceMap& c, int bins = 256);

}  // namespace css
