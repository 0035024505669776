#include "lgan/scene/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "lgan/core/parallel.hpp"
#include "lgan/core/rng.hpp"
#include "lgan/io/manifest.hpp"
#include "lgan/io/png_io.hpp"

namespace lgan::scene {

namespace fs = std::filesystem;

const char* shape_kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Ring: return "ring";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Square: return "square";
    case ShapeKind::Ellipse: return "ellipse";
    case ShapeKind::Crescent: return "crescent";
  }
  return "?";
}

namespace {

void hsv_to_rgb(double h, double s, double v, float* rgb) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  rgb[0] = static_cast<float>((r + m) * 2.0 - 1.0);
  rgb[1] = static_cast<float>((g + m) * 2.0 - 1.0);
  rgb[2] = static_cast<float>((b + m) * 2.0 - 1.0);
}

double hash01(uint64_t seed, int64_t x, int64_t y) {
  uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(x + 0x10000)) ^
               (0xc2b2ae3d27d4eb4fULL * static_cast<uint64_t>(y + 0x10000));
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Two-octave value noise in [0,1], bilinear between lattice hashes.
double value_noise(uint64_t seed, double x, double y) {
  double total = 0.0, amp = 0.65;
  for (int oct = 0; oct < 2; ++oct) {
    const int64_t xi = static_cast<int64_t>(std::floor(x));
    const int64_t yi = static_cast<int64_t>(std::floor(y));
    const double fx = x - xi, fy = y - yi;
    const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
    const double v00 = hash01(seed + oct, xi, yi), v10 = hash01(seed + oct, xi + 1, yi);
    const double v01 = hash01(seed + oct, xi, yi + 1), v11 = hash01(seed + oct, xi + 1, yi + 1);
    total += amp * ((v00 * (1 - sx) + v10 * sx) * (1 - sy) + (v01 * (1 - sx) + v11 * sx) * sy);
    amp *= 0.35;
    x *= 2.1;
    y *= 2.1;
  }
  return std::min(1.0, total);
}

bool inside_shape(const Instance& ins, double px, double py) {
  // Local coordinates: translate, rotate, scale to the unit bounding circle.
  const double dx = px - ins.cx, dy = py - ins.cy;
  const double cs = std::cos(-ins.rot), sn = std::sin(-ins.rot);
  const double x = (dx * cs - dy * sn) / ins.radius;
  const double y = (dx * sn + dy * cs) / ins.radius;
  const double rr = x * x + y * y;
  if (rr > 1.0) return false;
  switch (ins.kind) {
    case ShapeKind::Disc:
      return true;
    case ShapeKind::Ring:
      return rr >= 0.55 * 0.55;
    case ShapeKind::Square:
      return std::max(std::abs(x), std::abs(y)) <= 0.78;
    case ShapeKind::Triangle: {
      // Equilateral, circumradius 1, apex up.
      if (y < -0.5) return false;
      return std::abs(x) * 1.7320508075688772 <= 1.0 - y;
    }
    case ShapeKind::Ellipse:
      return x * x + (y / 0.6) * (y / 0.6) <= 1.0;
    case ShapeKind::Crescent:
      return (x - 0.45) * (x - 0.45) + y * y >= 0.7 * 0.7;
  }
  return false;
}

struct SamplePoint {
  double x, y;
};

void bg_color_at(const LayeredScene& s, double x, double y, float* rgb) {
  const double t = value_noise(s.bg_noise_seed, x / s.bg_scale, y / s.bg_scale);
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<float>(s.bg_color_a[c] * (1.0 - t) + s.bg_color_b[c] * t);
  }
}

// Topmost element color at one sample point, honoring the keep filter.
void sample_color(const LayeredScene& s, const std::vector<bool>& keep, double x, double y,
                  float* rgb) {
  for (auto it = s.layers.rbegin(); it != s.layers.rend(); ++it) {
    if (!keep[static_cast<size_t>(it->class_id)]) continue;
    for (const auto& ins : it->instances) {
      if (inside_shape(ins, x, y)) {
        rgb[0] = ins.color[0];
        rgb[1] = ins.color[1];
        rgb[2] = ins.color[2];
        return;
      }
    }
  }
  const double dx = x - s.base_cx, dy = y - s.base_cy;
  const double d = std::sqrt(dx * dx + dy * dy);
  if (d <= s.base_r) {
    const float* col = (d >= s.base_r - s.crust_w) ? s.crust_color : s.base_color;
    rgb[0] = col[0];
    rgb[1] = col[1];
    rgb[2] = col[2];
    return;
  }
  bg_color_at(s, x, y, rgb);
}

// Topmost kept layer id at a pixel center, or -1 when no layer covers it.
int64_t top_class_at(const LayeredScene& s, const std::vector<bool>& keep, double x, double y) {
  for (auto it = s.layers.rbegin(); it != s.layers.rend(); ++it) {
    if (!keep[static_cast<size_t>(it->class_id)]) continue;
    for (const auto& ins : it->instances) {
      if (inside_shape(ins, x, y)) return it->class_id;
    }
  }
  return -1;
}

std::vector<bool> all_kept(int64_t k) { return std::vector<bool>(static_cast<size_t>(k), true); }

Tensor<float> render_impl(const LayeredScene& s, const std::vector<bool>& keep) {
  const int64_t n = s.canvas;
  std::vector<float> img(static_cast<size_t>(3 * n * n));
  const int64_t plane = n * n;
  parallel_for(n, 8, [&](int64_t y0, int64_t y1) {
    float rgb[3];
    for (int64_t y = y0; y < y1; ++y) {
      for (int64_t x = 0; x < n; ++x) {
        float acc[3] = {0, 0, 0};
        if (s.antialias) {
          static const double off[4][2] = {{-0.25, -0.25}, {0.25, -0.25}, {-0.25, 0.25}, {0.25, 0.25}};
          for (const auto& o : off) {
            sample_color(s, keep, x + 0.5 + o[0], y + 0.5 + o[1], rgb);
            acc[0] += rgb[0];
            acc[1] += rgb[1];
            acc[2] += rgb[2];
          }
          acc[0] *= 0.25f;
          acc[1] *= 0.25f;
          acc[2] *= 0.25f;
        } else {
          sample_color(s, keep, x + 0.5, y + 0.5, acc);
        }
        img[y * n + x] = acc[0];
        img[plane + y * n + x] = acc[1];
        img[2 * plane + y * n + x] = acc[2];
      }
    }
  });
  return Tensor<float>::leaf({3, n, n}, std::move(img));
}

}  // namespace

void SceneConfig::validate() const {
  if (k() < 1 || k() > 10) {
    throw std::invalid_argument("scene config: class count must be in [1,10], got " +
                                std::to_string(k()));
  }
  if (canvas < 16) throw std::invalid_argument("scene config: canvas too small");
  if (min_toppings < 0 || max_toppings > k() || min_toppings > max_toppings) {
    throw std::invalid_argument("scene config: bad topping count range");
  }
  if (min_instances < 1 || min_instances > max_instances) {
    throw std::invalid_argument("scene config: bad instance count range");
  }
  if (base_radius_lo <= 0 || base_radius_hi > 0.5 || base_radius_lo > base_radius_hi) {
    throw std::invalid_argument("scene config: base radius range must fit the canvas");
  }
  for (const auto& c : classes) {
    if (c.size_lo <= 0 || c.size_lo > c.size_hi || c.size_hi > canvas * base_radius_hi) {
      throw std::invalid_argument(std::string("scene config: bad size range for class shape ") +
                                  shape_kind_name(c.kind));
    }
  }
}

SceneConfig SceneConfig::desk_default(int64_t k) {
  static const ShapeKind kinds[10] = {ShapeKind::Disc,     ShapeKind::Ring,  ShapeKind::Triangle,
                                      ShapeKind::Square,   ShapeKind::Ellipse, ShapeKind::Crescent,
                                      ShapeKind::Disc,     ShapeKind::Ring,  ShapeKind::Triangle,
                                      ShapeKind::Square};
  static const double hues[10] = {0.00, 0.33, 0.62, 0.14, 0.85, 0.50, 0.07, 0.75, 0.45, 0.92};
  SceneConfig cfg;
  cfg.canvas = 64;
  cfg.max_toppings = std::min<int64_t>(cfg.max_toppings, k);
  for (int64_t c = 0; c < k; ++c) {
    ClassDef def;
    def.kind = kinds[c % 10];
    def.hue = hues[c % 10];
    def.size_lo = 4.5;
    def.size_hi = 7.0;
    cfg.classes.push_back(def);
  }
  cfg.validate();
  return cfg;
}

LayeredScene generate_scene(const SceneConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(seed);
  LayeredScene s;
  s.canvas = config.canvas;
  s.k = config.k();
  s.antialias = config.antialias;
  s.seed = seed;

  // Background texture.
  const double hue_a = rng.uniform();
  hsv_to_rgb(hue_a, rng.uniform(0.15, 0.5), rng.uniform(0.25, 0.6), s.bg_color_a);
  hsv_to_rgb(hue_a + rng.uniform(0.05, 0.3), rng.uniform(0.15, 0.5), rng.uniform(0.45, 0.9),
             s.bg_color_b);
  s.bg_scale = rng.uniform(6.0, 16.0);
  s.bg_noise_seed = rng.next_u64();

  // Base disc and crust ring.
  const double n = static_cast<double>(config.canvas);
  s.base_cx = n * 0.5 + rng.uniform(-0.015, 0.015) * n;
  s.base_cy = n * 0.5 + rng.uniform(-0.015, 0.015) * n;
  s.base_r = rng.uniform(config.base_radius_lo, config.base_radius_hi) * n;
  s.crust_w = config.crust_width * n;
  hsv_to_rgb(rng.uniform(0.10, 0.13), rng.uniform(0.45, 0.6), rng.uniform(0.82, 0.95), s.base_color);
  hsv_to_rgb(rng.uniform(0.07, 0.10), rng.uniform(0.55, 0.7), rng.uniform(0.5, 0.65), s.crust_color);

  // Uniform topping subset and a uniform depth order.
  const int64_t count = rng.uniform_int(config.min_toppings, config.max_toppings);
  std::vector<int64_t> ids(static_cast<size_t>(config.k()));
  for (int64_t c = 0; c < config.k(); ++c) ids[c] = c;
  for (int64_t i = config.k() - 1; i > 0; --i) {
    std::swap(ids[i], ids[rng.uniform_int(0, i)]);
  }
  ids.resize(static_cast<size_t>(count));
  s.ordering = ids;  // shuffle order doubles as the bottom->top depth order
  s.label_vector.assign(static_cast<size_t>(config.k()), 0);
  for (int64_t c : ids) s.label_vector[static_cast<size_t>(c)] = 1;

  for (int64_t c : s.ordering) {
    const ClassDef& def = config.classes[static_cast<size_t>(c)];
    SceneLayer layer;
    layer.class_id = c;
    const int64_t m = rng.uniform_int(config.min_instances, config.max_instances);
    for (int64_t i = 0; i < m; ++i) {
      Instance ins;
      ins.kind = def.kind;
      ins.radius = rng.uniform(def.size_lo, def.size_hi);
      ins.rot = rng.uniform(0.0, 6.283185307179586);
      hsv_to_rgb(def.hue + rng.uniform(-def.hue_jitter, def.hue_jitter), rng.uniform(0.75, 0.95),
                 rng.uniform(0.7, 0.95), ins.color);
      // Keep the whole instance on the base disc.
      const double max_d = s.base_r - ins.radius - 1.0;
      if (max_d <= 0) {
        throw std::runtime_error("generate_scene: cannot place an instance of class " +
                                 std::to_string(c) + " (" + shape_kind_name(def.kind) +
                                 ") inside the base disc");
      }
      const double rad = max_d * std::sqrt(rng.uniform());
      const double ang = rng.uniform(0.0, 6.283185307179586);
      ins.cx = s.base_cx + rad * std::cos(ang);
      ins.cy = s.base_cy + rad * std::sin(ang);
      layer.instances.push_back(ins);
    }
    s.layers.push_back(std::move(layer));
  }

  // Hard ground-truth masks at pixel centers.
  const int64_t px = config.canvas;
  s.amodal_masks.resize(static_cast<size_t>(config.k()));
  s.visible_masks.resize(static_cast<size_t>(config.k()));
  std::vector<std::vector<float>> amodal(static_cast<size_t>(config.k()),
                                         std::vector<float>(static_cast<size_t>(px * px), 0.f));
  std::vector<std::vector<float>> visible = amodal;
  const auto keep = all_kept(config.k());
  for (int64_t y = 0; y < px; ++y) {
    for (int64_t x = 0; x < px; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      for (const auto& layer : s.layers) {
        for (const auto& ins : layer.instances) {
          if (inside_shape(ins, cx, cy)) {
            amodal[static_cast<size_t>(layer.class_id)][y * px + x] = 1.f;
            break;
          }
        }
      }
      const int64_t top = top_class_at(s, keep, cx, cy);
      if (top >= 0) visible[static_cast<size_t>(top)][y * px + x] = 1.f;
    }
  }
  for (int64_t c = 0; c < config.k(); ++c) {
    s.amodal_masks[c] = Tensor<float>::leaf({1, px, px}, std::move(amodal[c]));
    s.visible_masks[c] = Tensor<float>::leaf({1, px, px}, std::move(visible[c]));
  }
  return s;
}

Tensor<float> render(const LayeredScene& scene) {
  return render_impl(scene, all_kept(scene.k));
}

Tensor<float> render_subset(const LayeredScene& scene, const std::vector<bool>& keep) {
  if (keep.size() != static_cast<size_t>(scene.k)) {
    throw std::invalid_argument("render_subset: keep size does not match class count");
  }
  return render_impl(scene, keep);
}

Tensor<float> visible_mask_subset(const LayeredScene& scene, int64_t c,
                                  const std::vector<bool>& keep) {
  const int64_t n = scene.canvas;
  std::vector<float> m(static_cast<size_t>(n * n), 0.f);
  for (int64_t y = 0; y < n; ++y) {
    for (int64_t x = 0; x < n; ++x) {
      if (top_class_at(scene, keep, x + 0.5, y + 0.5) == c) m[y * n + x] = 1.f;
    }
  }
  return Tensor<float>::leaf({1, n, n}, std::move(m));
}

Tensor<float> base_visible_mask(const LayeredScene& scene) {
  const int64_t n = scene.canvas;
  const auto keep = all_kept(scene.k);
  std::vector<float> m(static_cast<size_t>(n * n), 0.f);
  for (int64_t y = 0; y < n; ++y) {
    for (int64_t x = 0; x < n; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      if (top_class_at(scene, keep, cx, cy) >= 0) continue;
      const double dx = cx - scene.base_cx, dy = cy - scene.base_cy;
      if (dx * dx + dy * dy <= scene.base_r * scene.base_r) m[y * n + x] = 1.f;
    }
  }
  return Tensor<float>::leaf({1, n, n}, std::move(m));
}

uint64_t config_hash(const SceneConfig& config) {
  nlohmann::json j;
  j["canvas"] = config.canvas;
  j["min_instances"] = config.min_instances;
  j["max_instances"] = config.max_instances;
  j["min_toppings"] = config.min_toppings;
  j["max_toppings"] = config.max_toppings;
  j["base_radius"] = {config.base_radius_lo, config.base_radius_hi};
  j["crust_width"] = config.crust_width;
  j["antialias"] = config.antialias;
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : config.classes) {
    cls.push_back({{"kind", shape_kind_name(c.kind)},
                   {"hue", c.hue},
                   {"hue_jitter", c.hue_jitter},
                   {"size", {c.size_lo, c.size_hi}}});
  }
  j["classes"] = cls;
  const std::string dump = j.dump();
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DatasetManifest generate_dataset(const SceneConfig& config, int64_t n, uint64_t seed,
                                 const std::string& out_dir, const std::string& split) {
  config.validate();
  if (n < 0) throw std::invalid_argument("generate_dataset: negative count");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("generate_dataset: cannot create " + out_dir + ": " + ec.message());

  DatasetManifest manifest;
  manifest.split = split;
  manifest.config_hash = config_hash(config);
  manifest.entries.resize(static_cast<size_t>(n));

  std::vector<std::string> failures(static_cast<size_t>(n));
  parallel_for(n, 1, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      try {
        const uint64_t scene_seed = Rng::derive(seed, static_cast<uint64_t>(i));
        const LayeredScene s = generate_scene(config, scene_seed);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%05lld", static_cast<long long>(i));
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        io::write_png_rgb((dir / "image.png").string(), render(s));

        ManifestEntry e;
        e.image = std::string(name) + "/image.png";
        e.label_vector = s.label_vector;
        e.ordering = s.ordering;
        e.seed = scene_seed;
        for (int64_t c = 0; c < s.k; ++c) {
          if (!s.has_class(c)) continue;
          const std::string am = std::string(name) + "/amodal_" + std::to_string(c) + ".png";
          const std::string vi = std::string(name) + "/visible_" + std::to_string(c) + ".png";
          io::write_png_gray((fs::path(out_dir) / am).string(), s.amodal_masks[c]);
          io::write_png_gray((fs::path(out_dir) / vi).string(), s.visible_masks[c]);
          e.mask_classes.push_back(c);
          e.amodal_paths.push_back(am);
          e.visible_paths.push_back(vi);
        }
        manifest.entries[static_cast<size_t>(i)] = std::move(e);
      } catch (const std::exception& ex) {
        failures[static_cast<size_t>(i)] = ex.what();
      }
    }
  });
  for (const auto& f : failures) {
    if (!f.empty()) throw std::runtime_error("generate_dataset: " + f);
  }

  io::write_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

}  // namespace lgan::scene
