#pragma once

#include <vector>

#include "css/types.hpp"

namespace css {

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::vector<double> per_view_psnr;
  std::vector<double> per_view_ssim;
};

inline constexpr double kPsnrCap = 99.0;

// 10*log10(1/MSE) over all channels; identical images return the 99 dB cap.
double psnr(const Image& a, const Image& b);

// Mean SSIM over 8x8 box windows, stride 1, on the channel-mean luma.
// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] range.
double ssim(const Image& a, const Image& b);

}  // namespace css
