#pragma once

#include <optional>
#include <string>

#include "css/align.hpp"
#include "css/ginit.hpp"
#include "css/io.hpp"
#include "css/metrics.hpp"
#include "css/render.hpp"
#include "css/synth.hpp"

namespace css {

// Flat key=value pipeline configuration; every key has a default and unknown
// keys are rejected by name.
struct PipelineConfig {
  uint64_t seed = 1;

  // synth
  int n_splats = 300;
  int n_views = 4;
  double point_sigma = 0.0;
  int occluders = 0;
  int image_width = 64;
  int image_height = 48;
  double focal = 90.0;
  int light_order = 2;
  int descriptor_dim = 24;
  double pose_perturb_deg = 0.0;   // applied to the emitted initial poses
  double trans_perturb_frac = 0.0;

  // matching
  int match_stride = 1;

  AlignConfig align;

  // mask
  bool use_otsu = false;
  double mask_threshold = 1.5;
  int otsu_bins = 256;

  GinitConfig ginit;

  RenderConfig render;
  int sh_order = 10;

  static PipelineConfig from_kv(const KeyValueConfig& kv);
  KeyValueConfig to_kv() const;
  static PipelineConfig load(const std::string& path);
};

// Exclusive lock on an output directory; throws IoError if already locked.
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

// Pipeline stages. Each validates its inputs and throws MissingStageOutput
// naming the missing artifact.
void cmd_synth(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_align(const std::string& dir, const PipelineConfig& cfg);
void cmd_init(const std::string& dir, const PipelineConfig& cfg);
void cmd_train(const std::string& dir, const PipelineConfig& cfg);
void cmd_render(const std::string& dir, const PipelineConfig& cfg,
                std::optional<std::pair<int, int>> novel_between = std::nullopt);
MetricReport cmd_eval(const std::string& dir, const PipelineConfig& cfg);

struct AblateReport {
  MetricReport full, no_cm, no_ib, no_cm_ib;
};
AblateReport cmd_ablate(const std::string& dir, const PipelineConfig& cfg, bool run_no_cm,
                        bool run_no_ib);

// Shared loaders (exposed for tests).
struct Dataset {
  std::vector<ViewRecord> views;
};
Dataset load_dataset(const std::string& dir);
void load_align_outputs(const std::string& dir, Dataset& ds);

}  // namespace css
