#pragma once

#include <map>
#include <string>
#include <vector>

#include "css/ginit.hpp"
#include "css/illum.hpp"
#include "css/view.hpp"

namespace css {

// --- images -----------------------------------------------------------

// Binary PPM (P6), 8-bit, values clamped to [0,1].
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Binary PGM (P5); true = 255.
void write_pgm_mask(const std::string& path, const Mask& mask);
Mask read_pgm_mask(const std::string& path);

// --- raw float32 grids -------------------------------------------------

// Little-endian float32, 16-byte header: magic "CSSP", u32 height, u32 width,
// u32 channels; pixel-interleaved row-major data.
void write_f32(const std::string& path, const std::vector<Grid>& channels);
std::vector<Grid> read_f32(const std::string& path);

// Point maps ride the 3-channel format; invalid pixels are stored as NaN.
void write_pointmap(const std::string& path, const PointMap& pm);
PointMap read_pointmap(const std::string& path);

void write_confidence(const std::string& path, const ConfidenceMap& c);
ConfidenceMap read_confidence(const std::string& path);

void write_features(const std::string& path, const FeatureMap& f);
FeatureMap read_features(const std::string& path);

// Raw env-map export: 8-byte header (u32 height, u32 width), then float32
// RGB triples row-major.
void write_envmap_raw(const std::string& path, const BakedEnvMap& env);

// --- splats -------------------------------------------------------------

// Binary little-endian PLY: per vertex x y z, qw qx qy qz, s0 s1 s2,
// w0 w1 w2 (all float32) plus a scene_scale comment.
void write_splats_ply(const std::string& path, const SplatSet& set);
SplatSet read_splats_ply(const std::string& path);

// --- text formats ---------------------------------------------------------

void write_poses(const std::string& path, const std::vector<SE3Pose>& poses);
std::vector<SE3Pose> read_poses(const std::string& path);

void write_intrinsics(const std::string& path, const std::vector<Intrinsics>& ks);
std::vector<Intrinsics> read_intrinsics(const std::string& path);

void write_light(const std::string& path, const SHLight& light);
SHLight read_light(const std::string& path);

void write_matches(const std::string& path, const MatchSet& ms);
MatchSet read_matches(const std::string& path);

// Flat key=value config with defaults; unknown keys are rejected by name.
struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig load(const std::string& path);
  void save(const std::string& path) const;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

bool file_exists(const std::string& path);

}  // namespace css
