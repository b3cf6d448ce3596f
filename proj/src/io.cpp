#include "css/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace css {

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

void put_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::ifstream& f) {
  uint8_t b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ofstream& f, float v) {
  static_assert(sizeof(float) == 4);
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(f, u);
}

float get_f32(std::ifstream& f) {
  const uint32_t u = get_u32(f);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
  auto f = open_out(path, true);
  f << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const uint8_t px[3] = {to_byte(img.r(r, c)), to_byte(img.g(r, c)), to_byte(img.b(r, c))};
      f.write(reinterpret_cast<const char*>(px), 3);
    }
  }
}

Image read_ppm(const std::string& path) {
  auto f = open_in(path, true);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError("bad PPM header: " + path);
  }
  f.get();  // single whitespace after header
  Image img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      uint8_t px[3];
      f.read(reinterpret_cast<char*>(px), 3);
      img.set(r, c, Vec3(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0));
    }
  }
  if (!f) throw IoError("truncated PPM: " + path);
  return img;
}

void write_pgm_mask(const std::string& path, const Mask& mask) {
  auto f = open_out(path, true);
  f << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      const uint8_t v = mask.values(r, c) ? 255 : 0;
      f.write(reinterpret_cast<const char*>(&v), 1);
    }
  }
}

Mask read_pgm_mask(const std::string& path) {
  auto f = open_in(path, true);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError("bad PGM header: " + path);
  }
  f.get();
  Mask mask{BoolGrid::Constant(h, w, false)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      uint8_t v;
      f.read(reinterpret_cast<char*>(&v), 1);
      mask.values(r, c) = v >= 128;
    }
  }
  if (!f) throw IoError("truncated PGM: " + path);
  return mask;
}

void write_f32(const std::string& path, const std::vector<Grid>& channels) {
  if (channels.empty()) throw IoError("write_f32: no channels");
  auto f = open_out(path, true);
  f.write("CSSP", 4);
  const int h = static_cast<int>(channels[0].rows());
  const int w = static_cast<int>(channels[0].cols());
  put_u32(f, static_cast<uint32_t>(h));
  put_u32(f, static_cast<uint32_t>(w));
  put_u32(f, static_cast<uint32_t>(channels.size()));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (const auto& ch : channels) put_f32(f, static_cast<float>(ch(r, c)));
    }
  }
}

std::vector<Grid> read_f32(const std::string& path) {
  auto f = open_in(path, true);
  char magic[4];
  f.read(magic, 4);
  if (std::strncmp(magic, "CSSP", 4) != 0) throw IoError("bad f32 magic: " + path);
  const int h = static_cast<int>(get_u32(f));
  const int w = static_cast<int>(get_u32(f));
  const int n = static_cast<int>(get_u32(f));
  if (h <= 0 || w <= 0 || n <= 0 || n > 4096) throw IoError("bad f32 header: " + path);
  std::vector<Grid> channels(n, Grid::Zero(h, w));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < n; ++k) channels[k](r, c) = get_f32(f);
    }
  }
  if (!f) throw IoError("truncated f32 file: " + path);
  return channels;
}

void write_pointmap(const std::string& path, const PointMap& pm) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Grid> ch = {pm.x, pm.y, pm.z};
  for (int r = 0; r < pm.height(); ++r) {
    for (int c = 0; c < pm.width(); ++c) {
      if (!pm.valid(r, c)) {
        ch[0](r, c) = nan;
        ch[1](r, c) = nan;
        ch[2](r, c) = nan;
      }
    }
  }
  write_f32(path, ch);
}

PointMap read_pointmap(const std::string& path) {
  const auto ch = read_f32(path);
  if (ch.size() != 3) throw IoError("point map must have 3 channels: " + path);
  PointMap pm(static_cast<int>(ch[0].rows()), static_cast<int>(ch[0].cols()));
  for (int r = 0; r < pm.height(); ++r) {
    for (int c = 0; c < pm.width(); ++c) {
      const Vec3 p(ch[0](r, c), ch[1](r, c), ch[2](r, c));
      if (p.array().isFinite().all()) {
        pm.set(r, c, p);
        pm.valid(r, c) = true;
      }
    }
  }
  return pm;
}

void write_confidence(const std::string& path, const ConfidenceMap& c) {
  write_f32(path, {c.values});
}

ConfidenceMap read_confidence(const std::string& path) {
  const auto ch = read_f32(path);
  if (ch.size() != 1) throw IoError("confidence map must have 1 channel: " + path);
  return ConfidenceMap{ch[0]};
}

void write_features(const std::string& path, const FeatureMap& f) {
  std::vector<Grid> ch;
  for (int d = 0; d < f.dim(); ++d) {
    Grid g(f.height, f.width);
    for (int r = 0; r < f.height; ++r) {
      for (int c = 0; c < f.width; ++c) g(r, c) = f.descriptors(r * f.width + c, d);
    }
    ch.push_back(std::move(g));
  }
  write_f32(path, ch);
}

FeatureMap read_features(const std::string& path) {
  const auto ch = read_f32(path);
  FeatureMap f;
  f.height = static_cast<int>(ch[0].rows());
  f.width = static_cast<int>(ch[0].cols());
  f.descriptors.resize(f.height * f.width, static_cast<int>(ch.size()));
  for (size_t d = 0; d < ch.size(); ++d) {
    for (int r = 0; r < f.height; ++r) {
      for (int c = 0; c < f.width; ++c) {
        f.descriptors(r * f.width + c, static_cast<int>(d)) = ch[d](r, c);
      }
    }
  }
  return f;
}

void write_envmap_raw(const std::string& path, const BakedEnvMap& env) {
  auto f = open_out(path, true);
  put_u32(f, static_cast<uint32_t>(env.height));
  put_u32(f, static_cast<uint32_t>(env.width));
  for (int r = 0; r < env.height; ++r) {
    for (int c = 0; c < env.width; ++c) {
      const Vec3 v = env.texel(r, c);
      put_f32(f, static_cast<float>(v.x()));
      put_f32(f, static_cast<float>(v.y()));
      put_f32(f, static_cast<float>(v.z()));
    }
  }
}

void write_splats_ply(const std::string& path, const SplatSet& set) {
  auto f = open_out(path, true);
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "comment scene_scale " << std::setprecision(17) << set.scene_scale << "\n";
  f << "element vertex " << set.splats.size() << "\n";
  for (const char* p : {"x", "y", "z", "qw", "qx", "qy", "qz", "scale_0", "scale_1", "scale_2",
                        "weight_r", "weight_g", "weight_b"}) {
    f << "property float " << p << "\n";
  }
  f << "end_header\n";
  for (const auto& s : set.splats) {
    put_f32(f, static_cast<float>(s.mean.x()));
    put_f32(f, static_cast<float>(s.mean.y()));
    put_f32(f, static_cast<float>(s.mean.z()));
    put_f32(f, static_cast<float>(s.rotation.w()));
    put_f32(f, static_cast<float>(s.rotation.x()));
    put_f32(f, static_cast<float>(s.rotation.y()));
    put_f32(f, static_cast<float>(s.rotation.z()));
    for (int k = 0; k < 3; ++k) put_f32(f, static_cast<float>(s.scales[k]));
    for (int k = 0; k < 3; ++k) put_f32(f, static_cast<float>(s.weight[k]));
  }
}

SplatSet read_splats_ply(const std::string& path) {
  auto f = open_in(path, true);
  std::string line;
  size_t count = 0;
  SplatSet set;
  bool header_done = false;
  while (std::getline(f, line)) {
    if (line.rfind("comment scene_scale ", 0) == 0) {
      set.scene_scale = std::stod(line.substr(20));
    } else if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoul(line.substr(15));
    } else if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw IoError("bad PLY header: " + path);
  for (size_t i = 0; i < count; ++i) {
    Splat s;
    const float mx = get_f32(f), my = get_f32(f), mz = get_f32(f);
    s.mean = Vec3(mx, my, mz);
    const float qw = get_f32(f), qx = get_f32(f), qy = get_f32(f), qz = get_f32(f);
    s.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    for (int k = 0; k < 3; ++k) s.scales[k] = get_f32(f);
    for (int k = 0; k < 3; ++k) s.weight[k] = get_f32(f);
    set.splats.push_back(s);
  }
  if (!f) throw IoError("truncated PLY: " + path);
  return set;
}

void write_poses(const std::string& path, const std::vector<SE3Pose>& poses) {
  auto f = open_out(path, false);
  f << std::setprecision(17);
  for (const auto& p : poses) {
    f << p.rotation.w() << ' ' << p.rotation.x() << ' ' << p.rotation.y() << ' '
      << p.rotation.z() << ' ' << p.translation.x() << ' ' << p.translation.y() << ' '
      << p.translation.z() << '\n';
  }
}

std::vector<SE3Pose> read_poses(const std::string& path) {
  auto f = open_in(path, false);
  std::vector<SE3Pose> poses;
  double qw, qx, qy, qz, tx, ty, tz;
  while (f >> qw >> qx >> qy >> qz >> tx >> ty >> tz) {
    SE3Pose p;
    p.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    p.translation = Vec3(tx, ty, tz);
    poses.push_back(p);
  }
  return poses;
}

void write_intrinsics(const std::string& path, const std::vector<Intrinsics>& ks) {
  auto f = open_out(path, false);
  f << std::setprecision(17);
  for (const auto& k : ks) {
    f << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' '
      << k.height << '\n';
  }
}

std::vector<Intrinsics> read_intrinsics(const std::string& path) {
  auto f = open_in(path, false);
  std::vector<Intrinsics> out;
  Intrinsics k;
  while (f >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height) out.push_back(k);
  return out;
}

void write_light(const std::string& path, const SHLight& light) {
  auto f = open_out(path, false);
  f << std::setprecision(17);
  f << light.order << '\n';
  for (int ch = 0; ch < 3; ++ch) {
    for (int i = 0; i < light.coeffs.cols(); ++i) {
      f << light.coeffs(ch, i) << (i + 1 < light.coeffs.cols() ? ' ' : '\n');
    }
  }
}

SHLight read_light(const std::string& path) {
  auto f = open_in(path, false);
  int order = 0;
  if (!(f >> order) || order < 0 || order > kMaxShOrder) {
    throw IoError("bad SH light file: " + path);
  }
  SHLight light = SHLight::zero(order);
  for (int ch = 0; ch < 3; ++ch) {
    for (int i = 0; i < light.coeffs.cols(); ++i) {
      if (!(f >> light.coeffs(ch, i))) throw IoError("truncated SH light file: " + path);
    }
  }
  return light;
}

void write_matches(const std::string& path, const MatchSet& ms) {
  auto f = open_out(path, false);
  f << std::setprecision(17);
  for (size_t i = 0; i < ms.pairs.size(); ++i) {
    const auto& pp = ms.pairs[i];
    f << pp.a.x() << ' ' << pp.a.y() << ' ' << pp.b.x() << ' ' << pp.b.y() << ' '
      << ms.weights[i] << '\n';
  }
}

MatchSet read_matches(const std::string& path) {
  auto f = open_in(path, false);
  MatchSet ms;
  double ax, ay, bx, by, w;
  while (f >> ax >> ay >> bx >> by >> w) {
    ms.pairs.push_back(PixelPair{Vec2(ax, ay), Vec2(bx, by)});
    ms.weights.push_back(w);
  }
  return ms;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  auto f = open_in(path, false);
  KeyValueConfig cfg;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!key.empty()) cfg.values[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

void KeyValueConfig::save(const std::string& path) const {
  auto f = open_out(path, false);
  for (const auto& [k, v] : values) f << k << " = " << v << '\n';
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + it->second);
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + it->second);
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

}  // namespace css
