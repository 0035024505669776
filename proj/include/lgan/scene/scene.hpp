#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgan/tensor/tensor.hpp"

namespace lgan::scene {

enum class ShapeKind { Disc, Ring, Triangle, Square, Ellipse, Crescent };

const char* shape_kind_name(ShapeKind k);

struct ClassDef {
  ShapeKind kind = ShapeKind::Disc;
  double hue = 0.0;        // center of the class hue band, [0,1)
  double hue_jitter = 0.02;
  double size_lo = 4.5;    // instance radius range, pixels
  double size_hi = 7.0;
};

struct SceneConfig {
  int64_t canvas = 64;
  std::vector<ClassDef> classes;
  int64_t min_instances = 3;
  int64_t max_instances = 8;
  int64_t min_toppings = 0;
  int64_t max_toppings = 3;
  double base_radius_lo = 0.40;  // fraction of canvas
  double base_radius_hi = 0.46;
  double crust_width = 0.055;    // fraction of canvas
  bool antialias = true;         // 2x supersampled RGB; masks are always hard

  int64_t k() const { return static_cast<int64_t>(classes.size()); }
  void validate() const;

  // 64x64, 4 classes, 0-3 toppings of 3-8 instances each.
  static SceneConfig desk_default(int64_t k = 4);
};

struct Instance {
  ShapeKind kind;
  double cx, cy;     // pixel coords
  double radius;     // bounding radius, pixels
  double rot;        // radians
  float color[3];    // RGB in [-1,1]
};

struct SceneLayer {
  int64_t class_id;
  std::vector<Instance> instances;
};

// Fully specified scene: geometry plus exact multi-layer ground truth.
struct LayeredScene {
  int64_t canvas = 0;
  int64_t k = 0;
  bool antialias = true;
  uint64_t seed = 0;

  // Background texture parameters (procedural, evaluated per sample point).
  float bg_color_a[3], bg_color_b[3];
  double bg_scale;
  uint64_t bg_noise_seed;

  // Base disc with a darker crust ring.
  double base_cx, base_cy, base_r;
  double crust_w;
  float base_color[3], crust_color[3];

  std::vector<SceneLayer> layers;      // bottom -> top
  std::vector<int> label_vector;       // length k, 1 iff class present
  std::vector<int64_t> ordering;       // present class ids, bottom -> top

  // Per-class hard binary masks [1,H,W]; zero masks for absent classes.
  std::vector<Tensor<float>> amodal_masks;
  std::vector<Tensor<float>> visible_masks;

  bool has_class(int64_t c) const { return label_vector[c] != 0; }
};

// Deterministic in (config, seed); throws if an instance cannot be placed
// inside the base disc after bounded retries.
LayeredScene generate_scene(const SceneConfig& config, uint64_t seed);

// Painter's composite of background, base, then layers bottom -> top.
// Output [3,H,W] in [-1,1].
Tensor<float> render(const LayeredScene& scene);

// Render with only the classes in `keep` (indexed by class id) painted.
// Layer order is preserved; used by the ground-truth removal oracle.
Tensor<float> render_subset(const LayeredScene& scene, const std::vector<bool>& keep);

// Hard mask of pixels whose center sees class c on top among the kept
// classes (base and background never occlude a layer).
Tensor<float> visible_mask_subset(const LayeredScene& scene, int64_t c, const std::vector<bool>& keep);

// Mask of pixels where the base disc is the topmost element (no layer covers
// the pixel center).
Tensor<float> base_visible_mask(const LayeredScene& scene);

struct ManifestEntry {
  std::string image;  // paths relative to the manifest
  std::vector<std::string> amodal_paths;   // per present class, aligned with mask_classes
  std::vector<std::string> visible_paths;
  std::vector<int64_t> mask_classes;
  std::vector<int> label_vector;
  std::vector<int64_t> ordering;  // bottom -> top
  uint64_t seed = 0;
  std::string extra_json;  // unknown fields, preserved verbatim on round trip
};

struct DatasetManifest {
  std::string split = "train";
  uint64_t config_hash = 0;
  std::vector<ManifestEntry> entries;
};

uint64_t config_hash(const SceneConfig& config);

// Renders and saves n scenes (image + masks as PNG) with per-scene seeds
// derived from the master seed; writes manifest.jsonl in out_dir.
DatasetManifest generate_dataset(const SceneConfig& config, int64_t n, uint64_t seed,
                                 const std::string& out_dir, const std::string& split = "train");

}  // namespace lgan::scene
