#pragma once

#include "lgan/tensor/ops.hpp"

namespace lgan {

// One generated layer: RGB appearance in (-1,1) and a soft selection mask in
// (0,1) deciding where the appearance replaces the input.
template <typename T>
struct LayerOutput {
  Tensor<T> appearance;
  Tensor<T> mask;
};

namespace detail {

template <typename T>
void check_layer_shapes(const char* op, const Tensor<T>& input, const LayerOutput<T>& layer) {
  const auto& is = input.shape();
  const auto& as = layer.appearance.shape();
  const auto& ms = layer.mask.shape();
  const bool batched = is.size() == 4;
  if (!batched && is.size() != 3) {
    throw std::invalid_argument(std::string(op) + ": image must be [3,H,W] or [N,3,H,W], got " +
                                shape_str(is));
  }
  if (as != is) {
    throw std::invalid_argument(std::string(op) + ": appearance shape " + shape_str(as) +
                                " does not match image " + shape_str(is));
  }
  Shape want_mask = batched ? Shape{is[0], 1, is[2], is[3]} : Shape{1, is[1], is[2]};
  if (ms != want_mask && !(ms.size() == 2 && !batched && ms[0] == is[1] && ms[1] == is[2])) {
    throw std::invalid_argument(std::string(op) + ": mask shape " + shape_str(ms) +
                                " does not match image " + shape_str(is));
  }
}

}  // namespace detail

// M*A + (1-M)*I with the single-channel mask broadcast over RGB. Pixels with
// M = 0 pass the input through bitwise; the graph stays differentiable in
// input, appearance, and mask.
template <typename T>
Tensor<T> composite(const Tensor<T>& input, const LayerOutput<T>& layer) {
  detail::check_layer_shapes("composite", input, layer);
  const bool batched = input.shape().size() == 4;
  Tensor<T> img = input, app = layer.appearance, m = layer.mask;
  Shape orig = input.shape();
  if (!batched) {
    img = reshape(img, {1, orig[0], orig[1], orig[2]});
    app = reshape(app, {1, orig[0], orig[1], orig[2]});
    m = reshape(m, {1, 1, orig[1], orig[2]});
  }
  const int64_t channels = img.dim(1);
  Tensor<T> mc = expand_channel(m, channels);
  Tensor<T> out = add(mul(mc, app), mul(scalar_sub(T(1), mc), img));
  if (!batched) out = reshape(out, orig);
  return out;
}

// Sum over pixels of the elementwise mask product (Fig. 4's overlap score).
// Left unnormalized: callers always compare intersections of the same image
// pair, so the scale cancels.
template <typename T>
double soft_intersection(const Tensor<T>& m1, const Tensor<T>& m2) {
  if (m1.shape() != m2.shape()) {
    throw std::invalid_argument("soft_intersection: shape mismatch " + shape_str(m1.shape()) +
                                " vs " + shape_str(m2.shape()));
  }
  double s = 0.0;
  const auto& a = m1.data();
  const auto& b = m2.data();
  for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

// Binary mask with the inclusive rule: pixel = 1 iff m >= tau.
template <typename T>
Tensor<T> threshold_mask(const Tensor<T>& m, T tau) {
  if (tau < T(0) || tau > T(1)) throw std::invalid_argument("threshold_mask: tau outside [0,1]");
  std::vector<T> out(m.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = m.data()[i] >= tau ? T(1) : T(0);
  return Tensor<T>::leaf(m.shape(), std::move(out));
}

}  // namespace lgan
