#pragma once

#include <array>
#include <string>
#include <vector>

#include "lgan/compose/compositor.hpp"
#include "lgan/core/rng.hpp"
#include "lgan/tensor/conv.hpp"
#include "lgan/tensor/ops.hpp"

namespace lgan::nets {

struct ArchConfig {
  int64_t canvas = 64;
  int64_t k = 4;
  int64_t gen_base = 32;       // encoder widths: base, 2*base, 4*base
  int64_t gen_res_blocks = 4;  // residual blocks at the bottleneck
  int64_t disc_base = 64;      // discriminator widths: base, 2*base, 4*base

  bool operator==(const ArchConfig&) const = default;
};

enum class Direction { Add, Remove };

inline const char* direction_name(Direction d) { return d == Direction::Add ? "add" : "remove"; }

// One generator module: downsampling encoder, residual bottleneck, upsampling
// decoder, then parallel appearance (tanh) and mask (sigmoid) heads. Convs
// followed by instance norm carry no bias (the norm would cancel it).
template <typename T>
struct GeneratorParams {
  int64_t class_id = 0;
  Direction direction = Direction::Add;
  Tensor<T> enc1_w;                                // [b, 3, 7, 7] stride 1
  Tensor<T> enc2_w;                                // [2b, b, 3, 3] stride 2
  Tensor<T> enc3_w;                                // [4b, 2b, 3, 3] stride 2
  std::vector<std::array<Tensor<T>, 2>> res_w;     // [4b, 4b, 3, 3] pairs
  Tensor<T> dec1_w;                                // convT [4b, 2b, 3, 3]
  Tensor<T> dec2_w;                                // convT [2b, b, 3, 3]
  Tensor<T> app_w, app_b;                          // [3, b, 7, 7]
  Tensor<T> mask_w, mask_b;                        // [1, b, 7, 7]

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<T>*>> out = {
        {"enc1_w", &enc1_w}, {"enc2_w", &enc2_w}, {"enc3_w", &enc3_w},
        {"dec1_w", &dec1_w}, {"dec2_w", &dec2_w}, {"app_w", &app_w},
        {"app_b", &app_b},   {"mask_w", &mask_w}, {"mask_b", &mask_b}};
    for (size_t i = 0; i < res_w.size(); ++i) {
      out.push_back({"res" + std::to_string(i) + "_w0", &res_w[i][0]});
      out.push_back({"res" + std::to_string(i) + "_w1", &res_w[i][1]});
    }
    return out;
  }
};

// Shared discriminator: PatchGAN trunk with a 1-channel patch head and a
// global-average-pooled k-way sigmoid classification head.
template <typename T>
struct DiscriminatorParams {
  Tensor<T> c1_w, c1_b;        // [d, 3, 4, 4] stride 2, no norm
  Tensor<T> c2_w;              // [2d, d, 4, 4] stride 2 + IN
  Tensor<T> c3_w;              // [4d, 2d, 4, 4] stride 2 + IN
  Tensor<T> patch_w, patch_b;  // [1, 4d, 4, 4] stride 1
  Tensor<T> cls_w, cls_b;      // [4d, k], [k]

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"c1_w", &c1_w},     {"c1_b", &c1_b},       {"c2_w", &c2_w},
            {"c3_w", &c3_w},     {"patch_w", &patch_w}, {"patch_b", &patch_b},
            {"cls_w", &cls_w},   {"cls_b", &cls_b}};
  }
};

template <typename T>
struct OperatorPair {
  int64_t class_id = 0;
  GeneratorParams<T> add;
  GeneratorParams<T> remove;
};

template <typename T>
struct ModelParams {
  ArchConfig arch;
  std::vector<OperatorPair<T>> pairs;  // one per class
  DiscriminatorParams<T> disc;

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (auto& p : pairs) {
      for (auto dir : {Direction::Add, Direction::Remove}) {
        auto& g = dir == Direction::Add ? p.add : p.remove;
        for (auto& [n, t] : g.named_params()) {
          out.push_back({"g/" + std::to_string(p.class_id) + "/" + direction_name(dir) + "/" + n, t});
        }
      }
    }
    for (auto& [n, t] : disc.named_params()) out.push_back({"d/" + n, t});
    return out;
  }
};

template <typename T>
struct DiscriminatorOutput {
  Tensor<T> patch;        // [N, 1, ph, pw] raw adversarial scores
  Tensor<T> class_probs;  // [N, k] sigmoid outputs
};

namespace detail {

template <typename T>
Tensor<T> conv_weight(Shape shape, Rng& rng) {
  return Tensor<T>::randn(std::move(shape), rng, static_cast<T>(0.02), true);
}

}  // namespace detail

template <typename T>
GeneratorParams<T> init_generator(const ArchConfig& a, int64_t class_id, Direction dir, Rng& rng) {
  const int64_t b = a.gen_base;
  GeneratorParams<T> g;
  g.class_id = class_id;
  g.direction = dir;
  g.enc1_w = detail::conv_weight<T>({b, 3, 7, 7}, rng);
  g.enc2_w = detail::conv_weight<T>({2 * b, b, 3, 3}, rng);
  g.enc3_w = detail::conv_weight<T>({4 * b, 2 * b, 3, 3}, rng);
  for (int64_t i = 0; i < a.gen_res_blocks; ++i) {
    g.res_w.push_back({detail::conv_weight<T>({4 * b, 4 * b, 3, 3}, rng),
                       detail::conv_weight<T>({4 * b, 4 * b, 3, 3}, rng)});
  }
  g.dec1_w = detail::conv_weight<T>({4 * b, 2 * b, 3, 3}, rng);
  g.dec2_w = detail::conv_weight<T>({2 * b, b, 3, 3}, rng);
  g.app_w = detail::conv_weight<T>({3, b, 7, 7}, rng);
  g.app_b = Tensor<T>::zeros({3}, true);
  g.mask_w = detail::conv_weight<T>({1, b, 7, 7}, rng);
  g.mask_b = Tensor<T>::zeros({1}, true);
  return g;
}

template <typename T>
DiscriminatorParams<T> init_discriminator(const ArchConfig& a, Rng& rng) {
  const int64_t d = a.disc_base;
  DiscriminatorParams<T> p;
  p.c1_w = detail::conv_weight<T>({d, 3, 4, 4}, rng);
  p.c1_b = Tensor<T>::zeros({d}, true);
  p.c2_w = detail::conv_weight<T>({2 * d, d, 4, 4}, rng);
  p.c3_w = detail::conv_weight<T>({4 * d, 2 * d, 4, 4}, rng);
  p.patch_w = detail::conv_weight<T>({1, 4 * d, 4, 4}, rng);
  p.patch_b = Tensor<T>::zeros({1}, true);
  p.cls_w = detail::conv_weight<T>({4 * d, a.k}, rng);
  p.cls_b = Tensor<T>::zeros({a.k}, true);
  return p;
}

// 2k generator modules (an add/remove pair per class) and one shared
// discriminator, Gaussian(0, 0.02) weights, zero biases, deterministic in
// the seed.
template <typename T>
ModelParams<T> init_params(const ArchConfig& arch, uint64_t seed) {
  if (arch.k < 1) throw std::invalid_argument("init_params: k must be positive");
  Rng rng(seed);
  ModelParams<T> m;
  m.arch = arch;
  for (int64_t c = 0; c < arch.k; ++c) {
    OperatorPair<T> pair;
    pair.class_id = c;
    pair.add = init_generator<T>(arch, c, Direction::Add, rng);
    pair.remove = init_generator<T>(arch, c, Direction::Remove, rng);
    m.pairs.push_back(std::move(pair));
  }
  m.disc = init_discriminator<T>(arch, rng);
  return m;
}

// Appearance in (-1,1) via tanh, mask in (0,1) via sigmoid.
template <typename T>
LayerOutput<T> generator_forward(const GeneratorParams<T>& g, const Tensor<T>& input) {
  if (input.shape().size() != 4 || input.dim(1) != 3) {
    throw std::invalid_argument("generator_forward: expected [N,3,H,W], got " +
                                shape_str(input.shape()));
  }
  Tensor<T> h = relu(instance_norm(conv2d(input, g.enc1_w, Tensor<T>(), 1, 3)));
  h = relu(instance_norm(conv2d(h, g.enc2_w, Tensor<T>(), 2, 1)));
  h = relu(instance_norm(conv2d(h, g.enc3_w, Tensor<T>(), 2, 1)));
  for (const auto& block : g.res_w) {
    Tensor<T> r = relu(instance_norm(conv2d(h, block[0], Tensor<T>(), 1, 1)));
    r = instance_norm(conv2d(r, block[1], Tensor<T>(), 1, 1));
    h = add(h, r);
  }
  h = relu(instance_norm(conv_transpose2d(h, g.dec1_w, Tensor<T>(), 2, 1, 1)));
  h = relu(instance_norm(conv_transpose2d(h, g.dec2_w, Tensor<T>(), 2, 1, 1)));
  LayerOutput<T> out;
  out.appearance = tanh_op(conv2d(h, g.app_w, g.app_b, 1, 3));
  out.mask = sigmoid(conv2d(h, g.mask_w, g.mask_b, 1, 3));
  return out;
}

// Applies a generator module to an image: composite(I, G(I)).
template <typename T>
Tensor<T> apply_generator(const GeneratorParams<T>& g, const Tensor<T>& input) {
  return composite(input, generator_forward(g, input));
}

template <typename T>
DiscriminatorOutput<T> discriminator_forward(const DiscriminatorParams<T>& d,
                                             const Tensor<T>& input) {
  if (input.shape().size() != 4 || input.dim(1) != 3) {
    throw std::invalid_argument("discriminator_forward: expected [N,3,H,W], got " +
                                shape_str(input.shape()));
  }
  const T slope = static_cast<T>(0.2);
  Tensor<T> h = leaky_relu(conv2d(input, d.c1_w, d.c1_b, 2, 1), slope);
  h = leaky_relu(instance_norm(conv2d(h, d.c2_w, Tensor<T>(), 2, 1)), slope);
  h = leaky_relu(instance_norm(conv2d(h, d.c3_w, Tensor<T>(), 2, 1)), slope);
  DiscriminatorOutput<T> out;
  out.patch = conv2d(h, d.patch_w, d.patch_b, 1, 1);
  Tensor<T> gap = avg_pool2d(h, h.dim(2), h.dim(2));
  gap = reshape(gap, {h.dim(0), h.dim(1)});
  out.class_probs = sigmoid(add_rowvec(matmul(gap, d.cls_w), d.cls_b));
  return out;
}

}  // namespace lgan::nets
