#include "css/synth.hpp"

#include <cmath>
#include <set>

#include "css/rng.hpp"

namespace css {

double Scene::diameter() const {
  Vec3 centroid = Vec3::Zero();
  for (const auto& s : splats.splats) centroid += s.mean;
  centroid /= static_cast<double>(splats.splats.size());
  double radius = 0.0;
  for (const auto& s : splats.splats) {
    radius = std::max(radius, (s.mean - centroid).norm());
  }
  return std::max(2.0 * radius, 1e-12);
}

namespace {

SE3Pose look_at(const Vec3& position, const Vec3& target) {
  const Vec3 forward = (target - position).normalized();
  Vec3 up_hint(0, 0, 1);
  if (std::abs(forward.dot(up_hint)) > 0.99) up_hint = Vec3(0, 1, 0);
  const Vec3 right = up_hint.cross(forward).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;  // world-to-camera rows: x right, y down, z forward
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  SE3Pose p;
  p.rotation = Eigen::Quaterniond(r).normalized();
  p.translation = -(r * position);
  return p;
}

}  // namespace

Scene gen_scene(uint64_t seed, int n_splats, int n_views, const SynthOptions& opts) {
  Scene scene;
  scene.seed = seed;
  scene.options = opts;
  Rng rng(seed);

  scene.splats.scene_scale = 2.0;
  for (int i = 0; i < n_splats; ++i) {
    Splat s;
    Vec3 p;
    do {
      p = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (p.norm() > 1.0);
    s.mean = p;
    const Vec3 axis = rng.unit_vector();
    s.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(0, M_PI), axis)).normalized();
    Vec3 scales(rng.uniform(0.06, 0.16), rng.uniform(0.06, 0.16), rng.uniform(0.06, 0.16));
    std::sort(scales.data(), scales.data() + 3, std::greater<double>());
    s.scales = scales;
    s.weight = Vec3(rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95));
    scene.splats.splats.push_back(s);
  }

  for (int v = 0; v < n_views; ++v) {
    const Vec3 dir = rng.unit_vector();
    scene.poses.push_back(look_at(opts.camera_radius * dir, Vec3::Zero()));
    Intrinsics k;
    k.fx = k.fy = opts.focal;
    k.cx = (opts.image_width - 1) * 0.5;
    k.cy = (opts.image_height - 1) * 0.5;
    k.width = opts.image_width;
    k.height = opts.image_height;
    scene.intrinsics.push_back(k);

    SHLight light = SHLight::zero(opts.light_order);
    for (int ch = 0; ch < 3; ++ch) {
      light.coeffs(ch, 0) = 2.0 * std::sqrt(M_PI) * rng.uniform(0.6, 1.4);
      for (int i = 1; i < sh_coeff_count(opts.light_order); ++i) {
        light.coeffs(ch, i) = rng.uniform(-0.35, 0.35);
      }
    }
    scene.lights.push_back(light);
  }
  return scene;
}

SynthDataset gen_views(const Scene& scene, const NoiseSpec& noise) {
  SynthDataset ds;
  const int n_views = static_cast<int>(scene.poses.size());
  const int n_splats = static_cast<int>(scene.splats.splats.size());
  const int h = scene.options.image_height;
  const int w = scene.options.image_width;
  const int dim = scene.options.descriptor_dim;
  const double diam = scene.diameter();
  const double sigma_abs = noise.point_sigma * diam;

  Rng rng(scene.seed ^ 0xa5a5a5a5a5a5a5a5ULL);

  // World point cloud, two tiers. "Match" points (splat centers plus a few
  // ellipsoid samples) carry descriptors; "fill" points only densify the point
  // maps. A fill point that rounds onto any match point's pixel in any view is
  // discarded, so every in-frame match point wins its pixel in every view and
  // the mutual-NN match count stays high instead of being eaten by z-fighting.
  constexpr int kMatchSamplesPerSplat = 3;
  constexpr int kFillSamplesPerSplat = 37;
  std::vector<Vec3> world;
  std::vector<std::set<int>> match_pixels(n_views);
  // Greedy pixel claim: a match candidate is kept only if every in-frame
  // projection lands on an unclaimed pixel, so kept points never z-fight each
  // other and each one wins its pixel in every view it appears in.
  auto try_keep_match = [&](const Vec3& x) {
    std::vector<std::pair<int, int>> claims;
    for (int v = 0; v < n_views; ++v) {
      if (scene.poses[v].apply(x).z() <= kDepthEpsilon) continue;
      const Vec2 u = project(scene.intrinsics[v], scene.poses[v], x);
      const int c = pixel_col(u), r = pixel_row(u);
      if (r < 0 || r >= h || c < 0 || c >= w) continue;
      if (match_pixels[v].count(r * w + c)) return;
      claims.emplace_back(v, r * w + c);
    }
    for (const auto& [v, lin] : claims) match_pixels[v].insert(lin);
    world.push_back(x);
  };
  for (int j = 0; j < n_splats; ++j) {
    const Splat& s = scene.splats.splats[j];
    const Mat3 rot = s.rotation_matrix();
    try_keep_match(s.mean);
    for (int k = 0; k < kMatchSamplesPerSplat; ++k) {
      const Vec3 xi = rng.unit_vector() * rng.uniform(0.3, 1.5);
      try_keep_match(s.mean + rot * s.scales.cwiseProduct(xi));
    }
  }
  const int n_match = static_cast<int>(world.size());
  for (int j = 0; j < n_splats; ++j) {
    const Splat& s = scene.splats.splats[j];
    const Mat3 rot = s.rotation_matrix();
    for (int k = 0; k < kFillSamplesPerSplat; ++k) {
      const Vec3 xi = rng.unit_vector() * rng.uniform(0.3, 1.5);
      const Vec3 x = s.mean + rot * s.scales.cwiseProduct(xi);
      bool clear = true;
      for (int v = 0; v < n_views && clear; ++v) {
        if (scene.poses[v].apply(x).z() <= kDepthEpsilon) continue;
        const Vec2 u = project(scene.intrinsics[v], scene.poses[v], x);
        const int c = pixel_col(u), r = pixel_row(u);
        if (r >= 0 && r < h && c >= 0 && c < w && match_pixels[v].count(r * w + c)) clear = false;
      }
      if (clear) world.push_back(x);
    }
  }
  const int n_pts = static_cast<int>(world.size());

  // One unit descriptor per world point, shared across all of its projections.
  Eigen::MatrixXd descriptors(n_pts, dim);
  for (int i = 0; i < n_pts; ++i) {
    for (int d = 0; d < dim; ++d) descriptors(i, d) = rng.normal();
    descriptors.row(i).normalize();
  }

  // Per-view z-buffer over the world points (rounded pixels, nearest wins).
  std::vector<Eigen::MatrixXi> win(n_views);
  std::vector<std::vector<Vec2>> proj(n_views, std::vector<Vec2>(n_pts));
  std::vector<std::vector<char>> wins(n_views, std::vector<char>(n_pts, 0));
  for (int v = 0; v < n_views; ++v) {
    win[v] = Eigen::MatrixXi::Constant(h, w, -1);
    Grid depth = Grid::Constant(h, w, 1e300);
    for (int p = 0; p < n_pts; ++p) {
      const Vec3 pc = scene.poses[v].apply(world[p]);
      if (pc.z() <= kDepthEpsilon) continue;
      const Vec2 u = project(scene.intrinsics[v], scene.poses[v], world[p]);
      const int c = pixel_col(u), r = pixel_row(u);
      proj[v][p] = u;
      if (r < 0 || r >= h || c < 0 || c >= w) continue;
      if (pc.z() < depth(r, c)) {
        depth(r, c) = pc.z();
        win[v](r, c) = p;
      }
    }
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (win[v](r, c) >= 0) wins[v][win[v](r, c)] = 1;
      }
    }
  }

  // A point keeps its descriptor only if it wins a pixel in every view; all
  // other pixels of view v share one "unmatchable" descriptor u_v sitting on a
  // small per-view cone around an everywhere-visible anchor point. Any such
  // pixel's cross-view nearest neighbor is then the anchor pixel (whose own
  // nearest neighbor is its zero-distance twin), so mutual-NN matching returns
  // exactly the ground-truth correspondence set.
  std::vector<char> retained(n_pts, 0);
  for (int p = 0; p < n_match; ++p) {
    retained[p] = 1;
    for (int v = 0; v < n_views; ++v) {
      if (!wins[v][p]) {
        retained[p] = 0;
        break;
      }
    }
  }
  int anchor = -1;
  for (int p = 0; p < n_pts; ++p) {
    if (retained[p]) {
      anchor = p;
      break;
    }
  }
  if (anchor < 0) throw DegenerateMap("no world point visible in every view");
  // keep every retained descriptor clear of the anchor cone
  for (int p = 0; p < n_pts; ++p) {
    if (p == anchor) continue;
    while (descriptors.row(p).dot(descriptors.row(anchor)) >= 0.95) {
      for (int d = 0; d < dim; ++d) descriptors(p, d) = rng.normal();
      descriptors.row(p).normalize();
    }
  }
  const double cone = 0.05;
  Eigen::MatrixXd bg_desc(n_views, dim);
  {
    const Eigen::RowVectorXd da = descriptors.row(anchor);
    std::vector<Eigen::RowVectorXd> tangents;
    for (int v = 0; v < n_views; ++v) {
      Eigen::RowVectorXd t(dim);
      bool ok = false;
      while (!ok) {
        for (int d = 0; d < dim; ++d) t(d) = rng.normal();
        t -= t.dot(da) * da;
        if (t.norm() < 1e-6) continue;
        t.normalize();
        ok = true;
        for (const auto& prev : tangents) {
          if (std::abs(t.dot(prev)) >= 0.2) {
            ok = false;
            break;
          }
        }
      }
      tangents.push_back(t);
      bg_desc.row(v) = std::cos(cone) * da + std::sin(cone) * t;
    }
  }

  RenderConfig rcfg;
  for (int v = 0; v < n_views; ++v) {
    Rng vrng = rng.fork(static_cast<uint64_t>(v) + 1);
    ViewRecord view;
    view.intrinsics_init = view.intrinsics_opt = scene.intrinsics[v];
    view.pose_init = view.pose_opt = scene.poses[v];
    view.light = scene.lights[v];
    view.mask = Mask::all_true(h, w);

    view.points_init = PointMap(h, w);
    view.confidence.values = Grid::Constant(h, w, 0.05);
    view.features.height = h;
    view.features.width = w;
    view.features.descriptors.resize(h * w, dim);

    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int p = win[v](r, c);
        if (p >= 0) {
          const Vec3 true_cam = scene.poses[v].apply(world[p]);
          Vec3 noise_vec = Vec3::Zero();
          if (sigma_abs > 0.0) noise_vec = sigma_abs * vrng.normal3();
          view.points_init.set(r, c, true_cam + noise_vec);
          view.points_init.valid(r, c) = true;
          // normalized by a fixed fraction of the diameter so heavier noise
          // maps to lower confidence
          view.confidence.values(r, c) = 1.0 / (1.0 + noise_vec.norm() / (0.02 * diam));
          view.features.descriptors.row(r * w + c) =
              retained[p] ? descriptors.row(p) : bg_desc.row(v);
        } else {
          view.features.descriptors.row(r * w + c) = bg_desc.row(v);
        }
      }
    }
    view.points_opt = view.points_init;

    // ground-truth composed image through the real render path
    view.image = Image(h, w);  // compose sizes the illumination from the view
    const Image refl = render_reflectance(scene.splats, view.intrinsics_opt, view.pose_opt, h, w,
                                          rcfg);
    view.image = compose(refl, scene.lights[v], view).composed;
    ds.clean_images.push_back(view.image);

    // occluders: painted blobs with low confidence, invalid points and no
    // matchable descriptor
    BoolGrid footprint = BoolGrid::Constant(h, w, false);
    for (int o = 0; o < noise.occluder_count; ++o) {
      const double ocx = vrng.uniform(0.15, 0.85) * w;
      const double ocy = vrng.uniform(0.15, 0.85) * h;
      const double rx = vrng.uniform(0.08, 0.18) * w;
      const double ry = vrng.uniform(0.08, 0.18) * h;
      const Vec3 color(vrng.uniform(0, 1), vrng.uniform(0, 1), vrng.uniform(0, 1));
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          const double dx = (c - ocx) / rx, dy = (r - ocy) / ry;
          if (dx * dx + dy * dy <= 1.0) {
            footprint(r, c) = true;
            view.image.set(r, c, color);
            view.confidence.values(r, c) = 0.02 + 0.05 * vrng.uniform();
            view.points_init.valid(r, c) = false;
            view.points_opt.valid(r, c) = false;
            view.features.descriptors.row(r * w + c) = bg_desc.row(v);
          }
        }
      }
    }
    ds.occluder_footprint.push_back(footprint);
    ds.views.push_back(std::move(view));
  }

  // ground-truth correspondences: descriptor-retaining world points whose
  // pixels survived the occluders in both views, at their exact projections
  for (int i = 0; i < n_views; ++i) {
    for (int j = i + 1; j < n_views; ++j) {
      MatchSet ms;
      for (int p = 0; p < n_pts; ++p) {
        if (!retained[p]) continue;
        const Vec2& ua = proj[i][p];
        const Vec2& ub = proj[j][p];
        const int ra = pixel_row(ua), ca = pixel_col(ua);
        const int rb = pixel_row(ub), cb = pixel_col(ub);
        if (!ds.views[i].points_init.valid(ra, ca)) continue;
        if (!ds.views[j].points_init.valid(rb, cb)) continue;
        ms.pairs.push_back(PixelPair{ua, ub});
        ms.weights.push_back(std::min(ds.views[i].confidence.values(ra, ca),
                                      ds.views[j].confidence.values(rb, cb)));
      }
      if (!ms.pairs.empty()) ds.gt_matches[{i, j}] = ms;
    }
  }
  return ds;
}

}  // namespace css
