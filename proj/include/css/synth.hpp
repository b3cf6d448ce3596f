#pragma once

#include <map>
#include <vector>

#include "css/align.hpp"
#include "css/ginit.hpp"
#include "css/render.hpp"
#include "css/view.hpp"

namespace css {

struct SynthOptions {
  int image_width = 64;
  int image_height = 48;
  double focal = 90.0;
  int light_order = 2;
  int descriptor_dim = 24;
  double camera_radius = 3.0;
};

// Ground-truth scene standing in for the stereo front-end: splats, camera
// rig, per-view lights. Fully determined by the seed.
struct Scene {
  SplatSet splats;
  std::vector<SE3Pose> poses;
  std::vector<Intrinsics> intrinsics;
  std::vector<SHLight> lights;
  uint64_t seed = 0;
  SynthOptions options;

  double diameter() const;
};

struct NoiseSpec {
  double point_sigma = 0.0;  // fraction of scene diameter
  int occluder_count = 0;
};

struct SynthDataset {
  std::vector<ViewRecord> views;
  std::map<std::pair<int, int>, MatchSet> gt_matches;  // sub-pixel coordinates
  std::vector<Image> clean_images;                     // before occluder painting
  std::vector<BoolGrid> occluder_footprint;            // true where painted
};

Scene gen_scene(uint64_t seed, int n_splats, int n_views, const SynthOptions& opts = {});

SynthDataset gen_views(const Scene& scene, const NoiseSpec& noise);

}  // namespace css
