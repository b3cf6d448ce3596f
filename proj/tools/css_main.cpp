// css — crowd-sourced splatting pipeline driver.
//
// Subcommands mirror the pipeline stages; every stage reads and writes one
// dataset directory. Exit codes: 0 ok, 2 configuration problem, 3 missing
// stage output, 4 I/O failure, 5 optimization diverged.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "css/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  bool use_otsu = false;
  std::optional<double> threshold;
  std::optional<double> lambda;
  std::optional<int> sh_order;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value config file");
  cmd->add_option("--out", f.out_dir, "dataset / output directory")->required();
  cmd->add_option("--seed", f.seed, "RNG seed override");
  cmd->add_flag("--otsu", f.use_otsu, "pick mask thresholds automatically");
  cmd->add_option("--threshold", f.threshold, "fixed confidence mask threshold");
  cmd->add_option("--lambda", f.lambda, "coarse-loss weight in the alignment objectives");
  cmd->add_option("--sh-order", f.sh_order, "spherical-harmonic order for per-view lights");
}

css::PipelineConfig resolve_config(const CommonFlags& f) {
  css::PipelineConfig cfg;
  if (!f.config_path.empty()) {
    cfg = css::PipelineConfig::load(f.config_path);
  } else if (css::file_exists(f.out_dir + "/config.cfg")) {
    cfg = css::PipelineConfig::load(f.out_dir + "/config.cfg");
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.use_otsu) cfg.use_otsu = true;
  if (f.threshold) {
    cfg.mask_threshold = *f.threshold;
    cfg.use_otsu = f.use_otsu;
  }
  if (f.lambda) cfg.align.lambda = *f.lambda;
  if (f.sh_order) cfg.sh_order = *f.sh_order;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowd-sourced splatting pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;
  const char* names[] = {"synth", "align", "init", "train", "render", "eval", "ablate"};
  const char* descs[] = {
      "generate a synthetic dataset",          "recover poses, intrinsics and points",
      "threshold masks and seed the splats",   "optimize splats and per-view lights",
      "render the training views",             "PSNR/SSIM against the clean ground truth",
      "re-train with masks and/or per-view lighting disabled"};
  CLI::App* cmds[7];
  for (int i = 0; i < 7; ++i) {
    cmds[i] = app.add_subcommand(names[i], descs[i]);
    add_common(cmds[i], flags);
  }
  std::pair<int, int> novel{-1, -1};
  cmds[4]->add_option("--novel", novel, "render a midpoint view between two view indices");
  bool no_cm = false, no_ib = false;
  cmds[6]->add_flag("--no-mask", no_cm, "ablate the confidence masks");
  cmds[6]->add_flag("--no-light", no_ib, "ablate the per-view illumination");

  CLI11_PARSE(app, argc, argv);

  try {
    const css::PipelineConfig cfg = resolve_config(flags);
    if (cmds[0]->parsed()) {
      css::cmd_synth(cfg, flags.out_dir);
      return 0;
    }
    css::DirLock lock(flags.out_dir);
    if (cmds[1]->parsed()) {
      css::cmd_align(flags.out_dir, cfg);
    } else if (cmds[2]->parsed()) {
      css::cmd_init(flags.out_dir, cfg);
    } else if (cmds[3]->parsed()) {
      css::cmd_train(flags.out_dir, cfg);
    } else if (cmds[4]->parsed()) {
      std::optional<std::pair<int, int>> nv;
      if (novel.first >= 0 || novel.second >= 0) nv = novel;
      css::cmd_render(flags.out_dir, cfg, nv);
    } else if (cmds[5]->parsed()) {
      const css::MetricReport r = css::cmd_eval(flags.out_dir, cfg);
      std::printf("psnr %.17g ssim %.17g\n", r.psnr, r.ssim);
    } else if (cmds[6]->parsed()) {
      if (!no_cm && !no_ib) no_cm = no_ib = true;
      const css::AblateReport r = css::cmd_ablate(flags.out_dir, cfg, no_cm, no_ib);
      std::printf("full psnr %.17g ssim %.17g\n", r.full.psnr, r.full.ssim);
      if (no_cm) std::printf("no_confidence_mask psnr %.17g ssim %.17g\n", r.no_cm.psnr, r.no_cm.ssim);
      if (no_ib) std::printf("no_illumination psnr %.17g ssim %.17g\n", r.no_ib.psnr, r.no_ib.ssim);
      if (no_cm && no_ib) {
        std::printf("no_mask_no_illumination psnr %.17g ssim %.17g\n", r.no_cm_ib.psnr,
                    r.no_cm_ib.ssim);
      }
    }
    return 0;
  } catch (const css::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const css::MissingStageOutput& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const css::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const css::DivergedLoss& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return 5;
  } catch (const css::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
