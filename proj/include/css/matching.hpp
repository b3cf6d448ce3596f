#pragma once

#include <vector>

#include "css/geom.hpp"
#include "css/types.hpp"

namespace css {

// Dense per-pixel descriptors, one row per pixel (row-major pixel order).
struct FeatureMap {
  int height = 0, width = 0;
  Eigen::MatrixXd descriptors;  // (height*width) x dim

  int dim() const { return static_cast<int>(descriptors.cols()); }
  Eigen::RowVectorXd at(int row, int col) const { return descriptors.row(row * width + col); }
};

// Continuous pixel coordinates (col, row); reciprocal_match emits integer
// grid positions, synthetic ground truth may carry sub-pixel projections.
struct PixelPair {
  Vec2 a;  // in view a
  Vec2 b;  // in view b
};

inline int pixel_row(const Vec2& u) { return static_cast<int>(std::lround(u.y())); }
inline int pixel_col(const Vec2& u) { return static_cast<int>(std::lround(u.x())); }

struct MatchSet {
  std::vector<PixelPair> pairs;
  std::vector<double> weights;  // min of the two views' confidences

  size_t size() const { return pairs.size(); }
};

// Mutual nearest-neighbor matching over an L2 descriptor metric, restricted
// to pixels on a stride grid. Output sorted by the a-side pixel in row-major
// order; ties broken toward earlier row-major candidates. Weights are 1 here;
// apply_confidence fills them from the views' confidence maps.
MatchSet reciprocal_match(const FeatureMap& a, const FeatureMap& b, int stride);

void apply_confidence(MatchSet& matches, const ConfidenceMap& ca, const ConfidenceMap& cb);

}  // namespace css
