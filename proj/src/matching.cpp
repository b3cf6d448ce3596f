#include "css/matching.hpp"

#include <limits>

namespace css {

namespace {

std::vector<int> stride_samples(int height, int width, int stride) {
  std::vector<int> idx;
  for (int r = 0; r < height; r += stride) {
    for (int c = 0; c < width; c += stride) {
      idx.push_back(r * width + c);
    }
  }
  return idx;
}

// Index of the nearest row of `ref` (among ref_idx) for each query row;
// strict < keeps the earliest row-major candidate on ties.
std::vector<int> nearest(const Eigen::MatrixXd& query, const std::vector<int>& query_idx,
                         const Eigen::MatrixXd& ref, const std::vector<int>& ref_idx) {
  std::vector<int> nn(query_idx.size(), -1);
  for (size_t qi = 0; qi < query_idx.size(); ++qi) {
    const auto q = query.row(query_idx[qi]);
    double best = std::numeric_limits<double>::infinity();
    int best_ri = -1;
    for (size_t ri = 0; ri < ref_idx.size(); ++ri) {
      const double d2 = (ref.row(ref_idx[ri]) - q).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_ri = static_cast<int>(ri);
      }
    }
    nn[qi] = best_ri;
  }
  return nn;
}

}  // namespace

MatchSet reciprocal_match(const FeatureMap& a, const FeatureMap& b, int stride) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("reciprocal_match: descriptor dims " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
  if (stride < 1) stride = 1;
  const std::vector<int> ia = stride_samples(a.height, a.width, stride);
  const std::vector<int> ib = stride_samples(b.height, b.width, stride);

  const std::vector<int> a_to_b = nearest(a.descriptors, ia, b.descriptors, ib);
  const std::vector<int> b_to_a = nearest(b.descriptors, ib, a.descriptors, ia);

  MatchSet out;
  for (size_t qi = 0; qi < ia.size(); ++qi) {
    const int ri = a_to_b[qi];
    if (ri >= 0 && b_to_a[ri] == static_cast<int>(qi)) {
      const int pa = ia[qi], pb = ib[ri];
      PixelPair pp;
      pp.a = Vec2(pa % a.width, pa / a.width);
      pp.b = Vec2(pb % b.width, pb / b.width);
      out.pairs.push_back(pp);
      out.weights.push_back(1.0);
    }
  }
  return out;
}

void apply_confidence(MatchSet& matches, const ConfidenceMap& ca, const ConfidenceMap& cb) {
  for (size_t i = 0; i < matches.pairs.size(); ++i) {
    const auto& pp = matches.pairs[i];
    matches.weights[i] = std::min(ca.values(pixel_row(pp.a), pixel_col(pp.a)),
                                  cb.values(pixel_row(pp.b), pixel_col(pp.b)));
  }
}

}  // namespace css
