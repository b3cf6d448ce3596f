#include "css/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "css/rng.hpp"

namespace fs = std::filesystem;

namespace css {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string view_file(const std::string& dir, int v, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "view_%03d_%s", v, suffix);
  return dir + "/" + buf;
}

void write_image_f32(const std::string& path, const Image& img) {
  write_f32(path, {img.r, img.g, img.b});
}

Image read_image_f32(const std::string& path) {
  const auto ch = read_f32(path);
  if (ch.size() != 3) throw IoError("expected 3-channel image: " + path);
  Image img;
  img.r = ch[0];
  img.g = ch[1];
  img.b = ch[2];
  return img;
}

void require(const std::string& path) {
  if (!file_exists(path)) throw MissingStageOutput("missing stage output: " + path);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",          "n_splats",        "n_views",       "point_sigma",
      "occluders",     "image_width",     "image_height",  "focal",
      "light_order",   "descriptor_dim",  "pose_perturb_deg", "trans_perturb_frac",
      "match_stride",  "lambda",          "coarse_iters",  "fine_iters",
      "align_step",    "align_tol",       "use_otsu",      "mask_threshold",
      "otsu_bins",     "conf_threshold",  "seed_stride",   "floor_fraction",
      "cutoff_sigmas", "train_iters",     "step_weight",   "step_mean",
      "step_scales",   "step_rotation",   "step_sh",       "threads",
      "sh_order"};
  return keys;
}

// softplus(pre) == 1
constexpr double kUnitPreactivation = 0.54132485461292165;
constexpr double kY00 = 0.28209479177387814;

SHLight constant_unit_light() {
  SHLight li = SHLight::zero(0);
  li.coeffs.row(0).setConstant(kUnitPreactivation / kY00);
  li.coeffs.row(1) = li.coeffs.row(0);
  li.coeffs.row(2) = li.coeffs.row(0);
  return li;
}

}  // namespace

PipelineConfig PipelineConfig::from_kv(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.values) {
    (void)value;
    if (!known_keys().count(key)) throw ConfigError("unknown config key: " + key);
  }
  PipelineConfig c;
  c.seed = static_cast<uint64_t>(kv.get_double("seed", static_cast<double>(c.seed)));
  c.n_splats = kv.get_int("n_splats", c.n_splats);
  c.n_views = kv.get_int("n_views", c.n_views);
  c.point_sigma = kv.get_double("point_sigma", c.point_sigma);
  c.occluders = kv.get_int("occluders", c.occluders);
  c.image_width = kv.get_int("image_width", c.image_width);
  c.image_height = kv.get_int("image_height", c.image_height);
  c.focal = kv.get_double("focal", c.focal);
  c.light_order = kv.get_int("light_order", c.light_order);
  c.descriptor_dim = kv.get_int("descriptor_dim", c.descriptor_dim);
  c.pose_perturb_deg = kv.get_double("pose_perturb_deg", c.pose_perturb_deg);
  c.trans_perturb_frac = kv.get_double("trans_perturb_frac", c.trans_perturb_frac);
  c.match_stride = kv.get_int("match_stride", c.match_stride);
  c.align.lambda = kv.get_double("lambda", c.align.lambda);
  c.align.coarse_iters = kv.get_int("coarse_iters", c.align.coarse_iters);
  c.align.fine_iters = kv.get_int("fine_iters", c.align.fine_iters);
  c.align.step_size = kv.get_double("align_step", c.align.step_size);
  c.align.convergence_tol = kv.get_double("align_tol", c.align.convergence_tol);
  c.use_otsu = kv.get_bool("use_otsu", c.use_otsu);
  c.mask_threshold = kv.get_double("mask_threshold", c.mask_threshold);
  c.otsu_bins = kv.get_int("otsu_bins", c.otsu_bins);
  c.ginit.conf_threshold = kv.get_double("conf_threshold", c.ginit.conf_threshold);
  c.ginit.seed_stride = kv.get_int("seed_stride", c.ginit.seed_stride);
  c.ginit.floor_fraction = kv.get_double("floor_fraction", c.ginit.floor_fraction);
  c.render.cutoff_sigmas = kv.get_double("cutoff_sigmas", c.render.cutoff_sigmas);
  c.render.train_iters = kv.get_int("train_iters", c.render.train_iters);
  c.render.step_weight = kv.get_double("step_weight", c.render.step_weight);
  c.render.step_mean = kv.get_double("step_mean", c.render.step_mean);
  c.render.step_scales = kv.get_double("step_scales", c.render.step_scales);
  c.render.step_rotation = kv.get_double("step_rotation", c.render.step_rotation);
  c.render.step_sh = kv.get_double("step_sh", c.render.step_sh);
  c.render.threads = kv.get_int("threads", c.render.threads);
  c.sh_order = kv.get_int("sh_order", c.sh_order);
  if (c.n_views < 2) throw ConfigError("n_views must be at least 2");
  if (c.n_splats < 1) throw ConfigError("n_splats must be positive");
  if (c.image_width < 8 || c.image_height < 8) throw ConfigError("image size too small");
  if (c.sh_order < 0 || c.sh_order > kMaxShOrder) throw ConfigError("sh_order out of range");
  if (c.match_stride < 1) throw ConfigError("match_stride must be positive");
  return c;
}

KeyValueConfig PipelineConfig::to_kv() const {
  KeyValueConfig kv;
  auto& v = kv.values;
  v["seed"] = std::to_string(seed);
  v["n_splats"] = std::to_string(n_splats);
  v["n_views"] = std::to_string(n_views);
  v["point_sigma"] = fmt_double(point_sigma);
  v["occluders"] = std::to_string(occluders);
  v["image_width"] = std::to_string(image_width);
  v["image_height"] = std::to_string(image_height);
  v["focal"] = fmt_double(focal);
  v["light_order"] = std::to_string(light_order);
  v["descriptor_dim"] = std::to_string(descriptor_dim);
  v["pose_perturb_deg"] = fmt_double(pose_perturb_deg);
  v["trans_perturb_frac"] = fmt_double(trans_perturb_frac);
  v["match_stride"] = std::to_string(match_stride);
  v["lambda"] = fmt_double(align.lambda);
  v["coarse_iters"] = std::to_string(align.coarse_iters);
  v["fine_iters"] = std::to_string(align.fine_iters);
  v["align_step"] = fmt_double(align.step_size);
  v["align_tol"] = fmt_double(align.convergence_tol);
  v["use_otsu"] = use_otsu ? "true" : "false";
  v["mask_threshold"] = fmt_double(mask_threshold);
  v["otsu_bins"] = std::to_string(otsu_bins);
  v["conf_threshold"] = fmt_double(ginit.conf_threshold);
  v["seed_stride"] = std::to_string(ginit.seed_stride);
  v["floor_fraction"] = fmt_double(ginit.floor_fraction);
  v["cutoff_sigmas"] = fmt_double(render.cutoff_sigmas);
  v["train_iters"] = std::to_string(render.train_iters);
  v["step_weight"] = fmt_double(render.step_weight);
  v["step_mean"] = fmt_double(render.step_mean);
  v["step_scales"] = fmt_double(render.step_scales);
  v["step_rotation"] = fmt_double(render.step_rotation);
  v["step_sh"] = fmt_double(render.step_sh);
  v["threads"] = std::to_string(render.threads);
  v["sh_order"] = std::to_string(sh_order);
  return kv;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return from_kv(KeyValueConfig::load(path));
}

DirLock::DirLock(const std::string& dir) : path_(dir + "/.lock") {
  if (file_exists(path_)) {
    throw IoError("output directory is locked (remove " + path_ + " if stale)");
  }
  // a directory that does not exist yet has no outputs to protect; let the
  // stage itself report what is missing
  if (!fs::exists(dir)) {
    path_.clear();
    return;
  }
  std::ofstream f(path_);
  if (!f) throw IoError("cannot create lock file: " + path_);
  f << "locked\n";
}

DirLock::~DirLock() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
}

void cmd_synth(const PipelineConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/gt");

  SynthOptions opts;
  opts.image_width = cfg.image_width;
  opts.image_height = cfg.image_height;
  opts.focal = cfg.focal;
  opts.light_order = cfg.light_order;
  opts.descriptor_dim = cfg.descriptor_dim;

  const Scene scene = gen_scene(cfg.seed, cfg.n_splats, cfg.n_views, opts);
  NoiseSpec noise;
  noise.point_sigma = cfg.point_sigma;
  noise.occluder_count = cfg.occluders;
  const SynthDataset ds = gen_views(scene, noise);

  cfg.to_kv().save(out_dir + "/config.cfg");
  {
    std::ofstream m(out_dir + "/manifest.txt");
    m << "views " << cfg.n_views << "\n";
  }

  // initial poses: ground truth, optionally perturbed
  std::vector<SE3Pose> poses_init = scene.poses;
  if (cfg.pose_perturb_deg > 0.0 || cfg.trans_perturb_frac > 0.0) {
    Rng prng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const double diam = scene.diameter();
    for (auto& p : poses_init) {
      if (cfg.pose_perturb_deg > 0.0) {
        const Vec3 axis = prng.unit_vector();
        const double angle = cfg.pose_perturb_deg * M_PI / 180.0;
        p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)) * p.rotation;
        p.rotation.normalize();
      }
      if (cfg.trans_perturb_frac > 0.0) {
        p.translation += cfg.trans_perturb_frac * diam * prng.unit_vector();
      }
    }
  }
  write_poses(out_dir + "/poses_init.txt", poses_init);
  write_intrinsics(out_dir + "/intrinsics_init.txt", scene.intrinsics);

  for (int v = 0; v < cfg.n_views; ++v) {
    write_ppm(view_file(out_dir, v, "image.ppm"), ds.views[v].image);
    write_image_f32(view_file(out_dir, v, "image.f32"), ds.views[v].image);
    write_pointmap(view_file(out_dir, v, "points.f32"), ds.views[v].points_init);
    write_confidence(view_file(out_dir, v, "confidence.f32"), ds.views[v].confidence);
    write_features(view_file(out_dir, v, "features.f32"), ds.views[v].features);
  }

  // ground-truth sidecar for evaluation and tests
  const std::string gt = out_dir + "/gt";
  write_poses(gt + "/poses.txt", scene.poses);
  write_intrinsics(gt + "/intrinsics.txt", scene.intrinsics);
  write_splats_ply(gt + "/splats.ply", scene.splats);
  for (int v = 0; v < cfg.n_views; ++v) {
    write_light(view_file(gt, v, "light.txt"), scene.lights[v]);
    write_ppm(view_file(gt, v, "clean.ppm"), ds.clean_images[v]);
    write_image_f32(view_file(gt, v, "clean.f32"), ds.clean_images[v]);
    write_pgm_mask(view_file(gt, v, "occluders.pgm"), Mask{ds.occluder_footprint[v]});
  }
  for (const auto& [pair, ms] : ds.gt_matches) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "/matches_%d_%d.txt", pair.first, pair.second);
    write_matches(gt + buf, ms);
  }
}

Dataset load_dataset(const std::string& dir) {
  require(dir + "/manifest.txt");
  std::ifstream m(dir + "/manifest.txt");
  std::string tag;
  int n_views = 0;
  m >> tag >> n_views;
  if (tag != "views" || n_views < 2) throw IoError("bad manifest: " + dir);

  require(dir + "/poses_init.txt");
  require(dir + "/intrinsics_init.txt");
  const auto poses = read_poses(dir + "/poses_init.txt");
  const auto intrs = read_intrinsics(dir + "/intrinsics_init.txt");
  if (static_cast<int>(poses.size()) != n_views || static_cast<int>(intrs.size()) != n_views) {
    throw IoError("manifest/pose count mismatch: " + dir);
  }

  Dataset ds;
  for (int v = 0; v < n_views; ++v) {
    require(view_file(dir, v, "image.f32"));
    require(view_file(dir, v, "points.f32"));
    require(view_file(dir, v, "confidence.f32"));
    require(view_file(dir, v, "features.f32"));
    ViewRecord view;
    // .f32 keeps the full dynamic range; the .ppm alongside is only a preview
    view.image = read_image_f32(view_file(dir, v, "image.f32"));
    view.points_init = read_pointmap(view_file(dir, v, "points.f32"));
    view.points_opt = view.points_init;
    view.confidence = read_confidence(view_file(dir, v, "confidence.f32"));
    view.features = read_features(view_file(dir, v, "features.f32"));
    view.pose_init = view.pose_opt = poses[v];
    view.intrinsics_init = view.intrinsics_opt = intrs[v];
    view.mask = Mask::all_true(view.image.height(), view.image.width());
    view.light = SHLight::zero(0);
    ds.views.push_back(std::move(view));
  }
  return ds;
}

void load_align_outputs(const std::string& dir, Dataset& ds) {
  require(dir + "/poses_opt.txt");
  require(dir + "/intrinsics_opt.txt");
  const auto poses = read_poses(dir + "/poses_opt.txt");
  const auto intrs = read_intrinsics(dir + "/intrinsics_opt.txt");
  if (poses.size() != ds.views.size() || intrs.size() != ds.views.size()) {
    throw IoError("alignment output count mismatch: " + dir);
  }
  for (size_t v = 0; v < ds.views.size(); ++v) {
    require(view_file(dir, static_cast<int>(v), "points_opt.f32"));
    ds.views[v].pose_opt = poses[v];
    ds.views[v].intrinsics_opt = intrs[v];
    ds.views[v].points_opt = read_pointmap(view_file(dir, static_cast<int>(v), "points_opt.f32"));
  }
}

void cmd_align(const std::string& dir, const PipelineConfig& cfg) {
  Dataset ds = load_dataset(dir);
  const int n = static_cast<int>(ds.views.size());

  ViewGraph g;
  g.views = std::move(ds.views);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      MatchSet ms = reciprocal_match(g.views[i].features, g.views[j].features, cfg.match_stride);
      MatchSet kept;
      for (size_t k = 0; k < ms.pairs.size(); ++k) {
        const auto& pp = ms.pairs[k];
        const auto& pa = g.views[i].points_init;
        const auto& pb = g.views[j].points_init;
        if (!pa.valid(pixel_row(pp.a), pixel_col(pp.a))) continue;
        if (!pb.valid(pixel_row(pp.b), pixel_col(pp.b))) continue;
        kept.pairs.push_back(pp);
        kept.weights.push_back(ms.weights[k]);
      }
      if (kept.pairs.empty()) continue;
      apply_confidence(kept, g.views[i].confidence, g.views[j].confidence);
      g.matches[{i, j}] = std::move(kept);
    }
  }
  if (!graph_connected(g)) throw DisconnectedGraph("match graph is not connected");

  optimize(g, cfg.align, dir + "/align_trace.txt");

  std::vector<SE3Pose> poses;
  std::vector<Intrinsics> intrs;
  for (int v = 0; v < n; ++v) {
    poses.push_back(g.views[v].pose_opt);
    intrs.push_back(g.views[v].intrinsics_opt);
    write_pointmap(view_file(dir, v, "points_opt.f32"), g.views[v].points_opt);
  }
  write_poses(dir + "/poses_opt.txt", poses);
  write_intrinsics(dir + "/intrinsics_opt.txt", intrs);
}

void cmd_init(const std::string& dir, const PipelineConfig& cfg) {
  Dataset ds = load_dataset(dir);
  load_align_outputs(dir, ds);

  for (size_t v = 0; v < ds.views.size(); ++v) {
    const double tau = cfg.use_otsu ? otsu_threshold(ds.views[v].confidence, cfg.otsu_bins)
                                    : cfg.mask_threshold;
    ds.views[v].mask = threshold_mask(ds.views[v].confidence, tau);
    write_pgm_mask(view_file(dir, static_cast<int>(v), "mask.pgm"), ds.views[v].mask);
  }

  const SplatSet splats = init_splats(ds.views, cfg.ginit);
  write_splats_ply(dir + "/splats_init.ply", splats);
}

namespace {

struct TrainInputs {
  Dataset ds;
  SplatSet splats;
  std::vector<SHLight> lights;
};

TrainInputs load_train_inputs(const std::string& dir, const PipelineConfig& cfg) {
  TrainInputs in;
  in.ds = load_dataset(dir);
  load_align_outputs(dir, in.ds);
  require(dir + "/splats_init.ply");
  in.splats = read_splats_ply(dir + "/splats_init.ply");
  for (size_t v = 0; v < in.ds.views.size(); ++v) {
    const std::string mpath = view_file(dir, static_cast<int>(v), "mask.pgm");
    require(mpath);
    in.ds.views[v].mask = read_pgm_mask(mpath);
  }
  in.lights.assign(in.ds.views.size(), SHLight::zero(cfg.sh_order));
  return in;
}

}  // namespace

void cmd_train(const std::string& dir, const PipelineConfig& cfg) {
  TrainInputs in = load_train_inputs(dir, cfg);
  const TrainResult tr = train(in.splats, in.ds.views, in.lights, cfg.render);

  write_splats_ply(dir + "/splats_trained.ply", tr.splats);
  for (size_t v = 0; v < tr.lights.size(); ++v) {
    write_light(view_file(dir, static_cast<int>(v), "light.txt"), tr.lights[v]);
  }
  std::ofstream trace(dir + "/train_trace.txt");
  for (size_t i = 0; i < tr.loss_trace.size(); ++i) {
    trace << i << " " << fmt_double(tr.loss_trace[i]) << "\n";
  }
}

void cmd_render(const std::string& dir, const PipelineConfig& cfg,
                std::optional<std::pair<int, int>> novel_between) {
  Dataset ds = load_dataset(dir);
  load_align_outputs(dir, ds);
  require(dir + "/splats_trained.ply");
  const SplatSet splats = read_splats_ply(dir + "/splats_trained.ply");
  std::vector<SHLight> lights;
  for (size_t v = 0; v < ds.views.size(); ++v) {
    const std::string lpath = view_file(dir, static_cast<int>(v), "light.txt");
    require(lpath);
    lights.push_back(read_light(lpath));
  }

  fs::create_directories(dir + "/renders");
  for (size_t v = 0; v < ds.views.size(); ++v) {
    const ViewRecord& view = ds.views[v];
    const Image refl = render_reflectance(splats, view.intrinsics_opt, view.pose_opt,
                                          view.image.height(), view.image.width(), cfg.render);
    const RenderedView rv = compose(refl, lights[v], view);
    write_ppm(view_file(dir + "/renders", static_cast<int>(v), "render.ppm"), rv.composed);
    write_image_f32(view_file(dir + "/renders", static_cast<int>(v), "render.f32"), rv.composed);
  }

  if (novel_between) {
    const int i = novel_between->first, j = novel_between->second;
    const int n = static_cast<int>(ds.views.size());
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw ConfigError("novel view indices out of range");
    }
    // halfway camera: slerped rotation, midpoint of the camera centers
    const SE3Pose& pi = ds.views[i].pose_opt;
    const SE3Pose& pj = ds.views[j].pose_opt;
    SE3Pose novel;
    novel.rotation = pi.rotation.slerp(0.5, pj.rotation).normalized();
    const Vec3 center = 0.5 * (pi.camera_center() + pj.camera_center());
    novel.translation = -(novel.rotation * center);

    ViewRecord stub;
    stub.image = Image(ds.views[i].image.height(), ds.views[i].image.width());
    stub.points_opt = PointMap(stub.image.height(), stub.image.width());
    stub.intrinsics_opt = ds.views[i].intrinsics_opt;
    stub.pose_opt = novel;
    const Image refl = render_reflectance(splats, stub.intrinsics_opt, novel,
                                          stub.image.height(), stub.image.width(), cfg.render);
    const RenderedView rv = compose(refl, lights[i], stub);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "/renders/novel_%d_%d.ppm", i, j);
    write_ppm(dir + buf, rv.composed);
  }
}

MetricReport cmd_eval(const std::string& dir, const PipelineConfig& cfg) {
  (void)cfg;
  Dataset ds = load_dataset(dir);
  MetricReport report;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (size_t v = 0; v < ds.views.size(); ++v) {
    const std::string render_path = view_file(dir + "/renders", static_cast<int>(v), "render.f32");
    const std::string clean_path = view_file(dir + "/gt", static_cast<int>(v), "clean.f32");
    require(render_path);
    require(clean_path);
    const Image rendered = read_image_f32(render_path);
    const Image clean = read_image_f32(clean_path);
    const double p = psnr(rendered, clean);
    const double s = ssim(rendered, clean);
    report.per_view_psnr.push_back(p);
    report.per_view_ssim.push_back(s);
    psnr_sum += p;
    ssim_sum += s;
  }
  report.psnr = psnr_sum / static_cast<double>(ds.views.size());
  report.ssim = ssim_sum / static_cast<double>(ds.views.size());

  std::ofstream f(dir + "/eval_report.txt");
  for (size_t v = 0; v < report.per_view_psnr.size(); ++v) {
    f << "view " << v << " psnr " << fmt_double(report.per_view_psnr[v]) << " ssim "
      << fmt_double(report.per_view_ssim[v]) << "\n";
  }
  f << "mean psnr " << fmt_double(report.psnr) << " ssim " << fmt_double(report.ssim) << "\n";
  return report;
}

namespace {

MetricReport train_and_eval_variant(const TrainInputs& base, const PipelineConfig& cfg,
                                    const std::vector<Image>& clean, bool no_cm, bool no_ib) {
  TrainInputs in = base;  // copies views, splats, lights
  if (no_cm) {
    for (auto& view : in.ds.views) {
      view.mask = Mask::all_true(view.image.height(), view.image.width());
    }
  }
  RenderConfig rc = cfg.render;
  if (no_ib) {
    in.lights.assign(in.ds.views.size(), constant_unit_light());
    rc.optimize_lights = false;
  }
  const TrainResult tr = train(in.splats, in.ds.views, in.lights, rc);

  MetricReport report;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (size_t v = 0; v < in.ds.views.size(); ++v) {
    const ViewRecord& view = in.ds.views[v];
    const Image refl = render_reflectance(tr.splats, view.intrinsics_opt, view.pose_opt,
                                          view.image.height(), view.image.width(), rc);
    const RenderedView rv = compose(refl, tr.lights[v], view);
    const double p = psnr(rv.composed, clean[v]);
    const double s = ssim(rv.composed, clean[v]);
    report.per_view_psnr.push_back(p);
    report.per_view_ssim.push_back(s);
    psnr_sum += p;
    ssim_sum += s;
  }
  report.psnr = psnr_sum / static_cast<double>(in.ds.views.size());
  report.ssim = ssim_sum / static_cast<double>(in.ds.views.size());
  return report;
}

}  // namespace

AblateReport cmd_ablate(const std::string& dir, const PipelineConfig& cfg, bool run_no_cm,
                        bool run_no_ib) {
  const TrainInputs base = load_train_inputs(dir, cfg);
  std::vector<Image> clean;
  for (size_t v = 0; v < base.ds.views.size(); ++v) {
    const std::string path = view_file(dir + "/gt", static_cast<int>(v), "clean.f32");
    require(path);
    clean.push_back(read_image_f32(path));
  }

  AblateReport rep;
  rep.full = train_and_eval_variant(base, cfg, clean, false, false);
  if (run_no_cm) rep.no_cm = train_and_eval_variant(base, cfg, clean, true, false);
  if (run_no_ib) rep.no_ib = train_and_eval_variant(base, cfg, clean, false, true);
  if (run_no_cm && run_no_ib) rep.no_cm_ib = train_and_eval_variant(base, cfg, clean, true, true);

  std::ofstream f(dir + "/ablate_report.txt");
  auto line = [&](const char* name, const MetricReport& r, bool ran) {
    if (!ran) return;
    f << name << " psnr " << fmt_double(r.psnr) << " ssim " << fmt_double(r.ssim) << "\n";
  };
  line("full", rep.full, true);
  line("no_confidence_mask", rep.no_cm, run_no_cm);
  line("no_illumination", rep.no_ib, run_no_ib);
  line("no_mask_no_illumination", rep.no_cm_ib, run_no_cm && run_no_ib);
  return rep;
}

}  // namespace css
