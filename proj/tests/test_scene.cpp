#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lgan/compose/compositor.hpp"
#include "lgan/io/manifest.hpp"
#include "lgan/scene/scene.hpp"

using namespace lgan;
using namespace lgan::scene;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("lgan_scene_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("empty topping range gives a bare base over background") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  cfg.min_toppings = cfg.max_toppings = 0;
  LayeredScene s = generate_scene(cfg, 7);
  CHECK(s.layers.empty());
  CHECK(s.ordering.empty());
  for (int v : s.label_vector) CHECK(v == 0);
  for (int64_t c = 0; c < 4; ++c) {
    int64_t nz = 0;
    for (float v : s.amodal_masks[c].data()) nz += v != 0.f;
    CHECK(nz == 0);
  }
  // Image equals the render with no layers kept.
  Tensor<float> img = render(s);
  Tensor<float> bare = render_subset(s, std::vector<bool>(4, false));
  CHECK(img.data() == bare.data());
}

TEST_CASE("same config and seed give byte-identical scenes") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  LayeredScene a = generate_scene(cfg, 1234);
  LayeredScene b = generate_scene(cfg, 1234);
  CHECK(render(a).data() == render(b).data());
  CHECK(a.ordering == b.ordering);
  CHECK(a.label_vector == b.label_vector);
  for (int64_t c = 0; c < 4; ++c) {
    CHECK(a.amodal_masks[c].data() == b.amodal_masks[c].data());
    CHECK(a.visible_masks[c].data() == b.visible_masks[c].data());
  }
  LayeredScene d = generate_scene(cfg, 1235);
  CHECK(render(a).data() != render(d).data());
}

TEST_CASE("two-class scenes: visible bottom mask is amodal minus the top amodal") {
  SceneConfig cfg = SceneConfig::desk_default(2);
  cfg.min_toppings = cfg.max_toppings = 2;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    LayeredScene s = generate_scene(cfg, seed);
    REQUIRE(s.ordering.size() == 2);
    const int64_t bottom = s.ordering[0], top = s.ordering[1];
    const auto& ab = s.amodal_masks[bottom].data();
    const auto& at = s.amodal_masks[top].data();
    const auto& vb = s.visible_masks[bottom].data();
    const auto& vt = s.visible_masks[top].data();
    int64_t bad = 0;
    for (size_t i = 0; i < ab.size(); ++i) {
      bad += vb[i] != (ab[i] == 1.f && at[i] == 0.f ? 1.f : 0.f);
      bad += vt[i] != at[i];  // the top layer is never occluded
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("scene invariants hold for generated scenes") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  for (uint64_t seed = 100; seed < 140; ++seed) {
    LayeredScene s = generate_scene(cfg, seed);
    const int64_t px = s.canvas * s.canvas;
    // label_vector[c] = 1 iff class c has instances.
    std::vector<int> present(4, 0);
    for (const auto& l : s.layers) present[static_cast<size_t>(l.class_id)] = !l.instances.empty();
    CHECK(present == s.label_vector);

    int64_t subset_bad = 0, occlusion_bad = 0;
    for (int64_t c = 0; c < 4; ++c) {
      const auto& am = s.amodal_masks[c].data();
      const auto& vi = s.visible_masks[c].data();
      int64_t rank = -1;
      for (size_t r = 0; r < s.ordering.size(); ++r) {
        if (s.ordering[r] == c) rank = static_cast<int64_t>(r);
      }
      for (int64_t p = 0; p < px; ++p) {
        subset_bad += vi[p] > am[p];  // visible must be a subset of amodal
        if (am[p] == 1.f && vi[p] == 0.f) {
          // Occluded pixel must be covered by some class above c.
          bool covered = false;
          for (size_t r = rank + 1; r < s.ordering.size(); ++r) {
            covered = covered || s.amodal_masks[s.ordering[r]].data()[p] == 1.f;
          }
          occlusion_bad += !covered;
        }
      }
    }
    CHECK(subset_bad == 0);
    CHECK(occlusion_bad == 0);

    // Visible masks are pairwise disjoint and, with the visible base and the
    // background remainder, partition the canvas.
    Tensor<float> base_vis = base_visible_mask(s);
    int64_t partition_bad = 0;
    for (int64_t p = 0; p < px; ++p) {
      float total = base_vis.data()[p];
      for (int64_t c = 0; c < 4; ++c) total += s.visible_masks[c].data()[p];
      partition_bad += !(total == 0.f || total == 1.f);
    }
    CHECK(partition_bad == 0);
  }
}

TEST_CASE("pixel colors follow the painter's algorithm") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  cfg.antialias = false;  // hard edges so colors are exact per pixel
  for (uint64_t seed = 200; seed < 210; ++seed) {
    LayeredScene s = generate_scene(cfg, seed);
    Tensor<float> img = render(s);
    const int64_t n = s.canvas, plane = n * n;
    Tensor<float> base_vis = base_visible_mask(s);
    int64_t color_bad = 0;
    for (int64_t p = 0; p < plane; ++p) {
      if (base_vis.data()[p] != 1.f) continue;
      const float r = img.data()[p], g = img.data()[plane + p], b = img.data()[2 * plane + p];
      const bool is_base = (r == s.base_color[0] && g == s.base_color[1] && b == s.base_color[2]);
      const bool is_crust = (r == s.crust_color[0] && g == s.crust_color[1] && b == s.crust_color[2]);
      color_bad += !(is_base || is_crust);
    }
    CHECK(color_bad == 0);

    // A doubly-covered pixel hides the lower class there.
    int64_t hide_bad = 0;
    for (size_t ra = 0; ra + 1 < s.ordering.size(); ++ra) {
      const int64_t a = s.ordering[ra];
      for (size_t rb = ra + 1; rb < s.ordering.size(); ++rb) {
        const int64_t b2 = s.ordering[rb];
        for (int64_t p = 0; p < plane; ++p) {
          if (s.amodal_masks[a].data()[p] == 1.f && s.amodal_masks[b2].data()[p] == 1.f) {
            hide_bad += s.visible_masks[a].data()[p] != 0.f;
          }
        }
      }
    }
    CHECK(hide_bad == 0);
  }
}

TEST_CASE("render equals the incremental compositor chain with binary masks") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  for (bool aa : {true, false}) {
    cfg.antialias = aa;
    LayeredScene s = generate_scene(cfg, 42);
    std::vector<bool> keep(4, false);
    Tensor<float> current = render_subset(s, keep);
    for (size_t t = 0; t < s.ordering.size(); ++t) {
      keep[static_cast<size_t>(s.ordering[t])] = true;
      Tensor<float> target = render_subset(s, keep);
      // Binary mask = pixels the new layer touches; appearance = the target
      // render. Composite must reproduce the target bitwise.
      const int64_t plane = s.canvas * s.canvas;
      std::vector<float> m(static_cast<size_t>(plane), 0.f);
      for (int64_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
          if (target.data()[c * plane + p] != current.data()[c * plane + p]) m[p] = 1.f;
        }
      }
      Tensor<float> mask = Tensor<float>::leaf({1, s.canvas, s.canvas}, std::move(m));
      Tensor<float> next = composite(current, LayerOutput<float>{target, mask});
      CHECK(next.data() == target.data());
      current = next;
    }
    CHECK(current.data() == render(s).data());
  }
}

TEST_CASE("erasing layers top to bottom reproduces the reduced renders") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  cfg.min_toppings = 2;
  for (bool aa : {true, false}) {
    cfg.antialias = aa;
    LayeredScene s = generate_scene(cfg, 77);
    std::vector<bool> keep(4, false);
    for (int64_t c : s.ordering) keep[static_cast<size_t>(c)] = true;
    Tensor<float> current = render(s);
    for (size_t t = s.ordering.size(); t-- > 0;) {
      const int64_t top = s.ordering[t];
      keep[static_cast<size_t>(top)] = false;
      Tensor<float> reduced = render_subset(s, keep);
      const int64_t plane = s.canvas * s.canvas;
      std::vector<float> m(static_cast<size_t>(plane), 0.f);
      for (int64_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
          if (reduced.data()[c * plane + p] != current.data()[c * plane + p]) m[p] = 1.f;
        }
      }
      Tensor<float> mask = Tensor<float>::leaf({1, s.canvas, s.canvas}, std::move(m));
      current = composite(current, LayerOutput<float>{reduced, mask});
      CHECK(current.data() == reduced.data());
    }
  }
}

TEST_CASE("oversized instances raise an error naming the class") {
  SceneConfig cfg = SceneConfig::desk_default(2);
  cfg.min_toppings = cfg.max_toppings = 2;
  cfg.classes[1].size_lo = cfg.classes[1].size_hi = 28.0;  // never fits the base disc
  try {
    generate_scene(cfg, 5);
    FAIL("expected placement failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
}

TEST_CASE("config validation rejects bad ranges") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  cfg.max_toppings = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SceneConfig::desk_default(4);
  cfg.classes.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(SceneConfig::desk_default(11).validate(), std::invalid_argument);
}

TEST_CASE("generate_dataset: empty, deterministic, and class-balanced") {
  SceneConfig cfg = SceneConfig::desk_default(4);
  const fs::path d0 = fresh_dir("empty");
  DatasetManifest m0 = generate_dataset(cfg, 0, 9, d0.string());
  CHECK(m0.entries.empty());
  DatasetManifest m0r = io::read_manifest((d0 / "manifest.jsonl").string());
  CHECK(m0r.entries.empty());
  CHECK(m0r.config_hash == config_hash(cfg));

  const fs::path d1 = fresh_dir("run1");
  const fs::path d2 = fresh_dir("run2");
  DatasetManifest m1 = generate_dataset(cfg, 100, 31, d1.string());
  generate_dataset(cfg, 100, 31, d2.string());
  REQUIRE(m1.entries.size() == 100);

  // Byte-identical files across re-runs.
  CHECK(slurp((d1 / "manifest.jsonl").string()) == slurp((d2 / "manifest.jsonl").string()));
  CHECK(slurp((d1 / "scene_00000/image.png").string()) ==
        slurp((d2 / "scene_00000/image.png").string()));
  CHECK(slurp((d1 / "scene_00042/image.png").string()) ==
        slurp((d2 / "scene_00042/image.png").string()));

  io::validate_manifest_files(m1, d1.string());

  // Each class appears in about n*E[#toppings]/k entries, within binomial 3 sigma.
  // k=4, toppings uniform on [0,3]: p = 1.5/4, n = 100.
  const double mean = 100 * 0.375, sigma = std::sqrt(100 * 0.375 * 0.625);
  std::vector<int> counts(4, 0);
  for (const auto& e : m1.entries) {
    for (int64_t c = 0; c < 4; ++c) counts[c] += e.label_vector[c];
  }
  for (int64_t c = 0; c < 4; ++c) {
    CHECK(counts[c] > mean - 3 * sigma);
    CHECK(counts[c] < mean + 3 * sigma);
  }

  fs::remove_all(d0);
  fs::remove_all(d1);
  fs::remove_all(d2);
}
