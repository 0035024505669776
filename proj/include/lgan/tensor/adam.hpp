#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lgan/tensor/tensor.hpp"

namespace lgan {

// Bias-corrected Adam. beta1 follows the cycle-consistent translation
// lineage (0.5) rather than the 0.9 default.
template <typename T>
struct AdamState {
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  int64_t step_count = 0;
  T beta1 = static_cast<T>(0.5);
  T beta2 = static_cast<T>(0.999);
  T epsilon = static_cast<T>(1e-8);
};

// One in-place update of param from its accumulated gradient. lr = 0 still
// advances the moment estimates.
template <typename T>
void adam_step(Tensor<T>& param, AdamState<T>& st, T lr) {
  if (lr < T(0)) throw std::invalid_argument("adam_step: negative learning rate");
  auto& p = param.data();
  auto& g = param.grad();
  if (st.first_moment.empty()) {
    st.first_moment.assign(p.size(), T(0));
    st.second_moment.assign(p.size(), T(0));
  }
  if (st.first_moment.size() != p.size() || g.size() != p.size()) {
    throw std::invalid_argument("adam_step: state/gradient shape mismatch for param " +
                                shape_str(param.shape()));
  }
  st.step_count += 1;
  const T b1 = st.beta1, b2 = st.beta2;
  const T c1 = T(1) - std::pow(b1, static_cast<T>(st.step_count));
  const T c2 = T(1) - std::pow(b2, static_cast<T>(st.step_count));
  for (size_t i = 0; i < p.size(); ++i) {
    st.first_moment[i] = b1 * st.first_moment[i] + (T(1) - b1) * g[i];
    st.second_moment[i] = b2 * st.second_moment[i] + (T(1) - b2) * g[i] * g[i];
    const T mhat = st.first_moment[i] / c1;
    const T vhat = st.second_moment[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + st.epsilon);
  }
}

}  // namespace lgan
