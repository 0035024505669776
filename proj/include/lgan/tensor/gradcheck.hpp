#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "lgan/tensor/tensor.hpp"

namespace lgan {

// Central finite-difference check of d(f)/d(x) against the autodiff result.
// f must build a scalar from the given leaf. Throws if f produces NaN or if
// the graph evaluates a kinked op (relu, |.|, sqrt) exactly at its kink.
// Returns the max over checked coordinates of
//   |analytic - fd| / max(1e-8, |analytic| + |fd|).
// coords limits the check to a subset (useful for large parameter tensors).
template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, T eps,
                  const std::vector<int64_t>* coords = nullptr) {
  auto& watch = detail::kink_watch();
  watch.enabled = true;
  watch.hit = false;
  auto run = [&](const Tensor<T>& in) -> T {
    Tensor<T> y = f(in);
    if (y.numel() != 1) {
      watch.enabled = false;
      throw std::invalid_argument("grad_check: f must be scalar-valued");
    }
    const T v = y.item();
    if (std::isnan(static_cast<double>(v))) {
      watch.enabled = false;
      throw std::runtime_error("grad_check: f produced NaN");
    }
    return v;
  };

  // Analytic pass.
  Tensor<T> xg = Tensor<T>::leaf(x.shape(), x.data(), true);
  Tensor<T> y = f(xg);
  if (y.numel() != 1) {
    watch.enabled = false;
    throw std::invalid_argument("grad_check: f must be scalar-valued");
  }
  if (std::isnan(static_cast<double>(y.item()))) {
    watch.enabled = false;
    throw std::runtime_error("grad_check: f produced NaN");
  }
  y.backward();
  if (watch.hit) {
    watch.enabled = false;
    throw std::invalid_argument("grad_check: input touches a non-differentiable point");
  }
  std::vector<T> analytic = xg.grad();

  std::vector<int64_t> all;
  if (!coords) {
    all.resize(static_cast<size_t>(x.numel()));
    for (int64_t i = 0; i < x.numel(); ++i) all[i] = i;
    coords = &all;
  }

  double max_rel = 0.0;
  Tensor<T> probe = Tensor<T>::leaf(x.shape(), x.data(), false);
  for (int64_t idx : *coords) {
    const T orig = probe.data()[idx];
    probe.data()[idx] = orig + eps;
    const double fp = static_cast<double>(run(probe));
    probe.data()[idx] = orig - eps;
    const double fm = static_cast<double>(run(probe));
    probe.data()[idx] = orig;
    const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
    const double an = static_cast<double>(analytic[idx]);
    const double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
    if (rel > max_rel) max_rel = rel;
  }
  if (watch.hit) {
    watch.enabled = false;
    throw std::invalid_argument("grad_check: perturbed input touches a non-differentiable point");
  }
  watch.enabled = false;
  return max_rel;
}

}  // namespace lgan
