#pragma once

#include "css/geom.hpp"
#include "css/illum.hpp"
#include "css/mask.hpp"
#include "css/matching.hpp"
#include "css/types.hpp"

namespace css {

// Everything known about one crowdsourced view: the stereo front-end inputs
// (image, point map, confidence, features) plus the quantities the pipeline
// estimates (optimized pose/intrinsics, optimized points, mask, light).
struct ViewRecord {
  Image image;
  PointMap points_init;  // camera-frame, from the front-end
  PointMap points_opt;   // camera-frame, refined by alignment
  ConfidenceMap confidence;
  FeatureMap features;
  Intrinsics intrinsics_init;
  Intrinsics intrinsics_opt;
  SE3Pose pose_init;
  SE3Pose pose_opt;
  Mask mask;
  SHLight light;

  int height() const { return image.height(); }
  int width() const { return image.width(); }
};

}  // namespace css
