#pragma once

#include <stdexcept>
#include <vector>

#include "lgan/nets/nets.hpp"
#include "lgan/tensor/ops.hpp"

namespace lgan::losses {

struct LossWeights {
  double lambda_cls = 1.0;
  double lambda_cyc = 10.0;
  double lambda_reg = 0.01;

  void validate() const {
    if (lambda_cls < 0 || lambda_cyc < 0 || lambda_reg < 0) {
      throw std::invalid_argument("loss weights must be non-negative");
    }
  }
};

// Least squares is the default; Log is the literal saturating form, in which
// case the patch inputs must already be probabilities.
enum class AdvMode { LeastSquares, Log };

template <typename T>
struct AdvTerms {
  Tensor<T> d_term;  // minimized by the discriminator
  Tensor<T> g_term;  // minimized by the generator
};

template <typename T>
AdvTerms<T> adversarial_losses(const Tensor<T>& patch_real, const Tensor<T>& patch_fake,
                               AdvMode mode = AdvMode::LeastSquares) {
  if (patch_real.shape() != patch_fake.shape()) {
    throw std::invalid_argument("adversarial_losses: patch shape mismatch " +
                                shape_str(patch_real.shape()) + " vs " +
                                shape_str(patch_fake.shape()));
  }
  AdvTerms<T> t;
  if (mode == AdvMode::LeastSquares) {
    t.d_term = add(mean_sq(add_scalar(patch_real, T(-1))), mean_sq(patch_fake));
    t.g_term = mean_sq(add_scalar(patch_fake, T(-1)));
  } else {
    // d = -E[log D(real)] - E[log(1 - D(fake))]; g = E[log(1 - D(fake))].
    Tensor<T> log_real = mean_all(log_op(patch_real));
    Tensor<T> log_one_minus_fake = mean_all(log_op(scalar_sub(T(1), patch_fake)));
    t.d_term = mul_scalar(add(log_real, log_one_minus_fake), T(-1));
    t.g_term = log_one_minus_fake;
  }
  return t;
}

// Squared L2 between predicted class probabilities and the target label
// vector, summed over classes and averaged over the batch.
template <typename T>
Tensor<T> classification_loss(const Tensor<T>& class_probs, const Tensor<T>& target) {
  if (class_probs.shape() != target.shape() || class_probs.shape().size() != 2) {
    throw std::invalid_argument("classification_loss: shape mismatch " +
                                shape_str(class_probs.shape()) + " vs " +
                                shape_str(target.shape()));
  }
  const T inv_batch = T(1) / static_cast<T>(class_probs.dim(0));
  return mul_scalar(sum_sq(sub(class_probs, target)), inv_batch);
}

// Post-edit target labels: adding class c sets bit c, removing clears it,
// all other labels are preserved.
inline std::vector<int> target_after_add(std::vector<int> labels, int64_t c) {
  labels[static_cast<size_t>(c)] = 1;
  return labels;
}
inline std::vector<int> target_after_remove(std::vector<int> labels, int64_t c) {
  labels[static_cast<size_t>(c)] = 0;
  return labels;
}

// Root-mean-square penalty keeping masks away from zero: ||1 - M|| per the
// RMS convention, summed over both directions.
template <typename T>
Tensor<T> mask_regularization(const Tensor<T>& m_plus, const Tensor<T>& m_minus) {
  return add(sqrt_op(mean_sq(scalar_sub(T(1), m_plus))),
             sqrt_op(mean_sq(scalar_sub(T(1), m_minus))));
}

// Both cycle directions plus every intermediate the trainer reuses.
template <typename T>
struct CycleResult {
  Tensor<T> image_term;  // L1(G-(G+(I-)) - I-) + L1(G+(G-(I+)) - I+)
  Tensor<T> mask_term;   // L1(M+(I-) - M-(If+)) + L1(M-(I+) - M+(If-))
  Tensor<T> total;       // sum of the two

  LayerOutput<T> add_on_minus;     // G+ applied to I-
  Tensor<T> fake_plus;             // composite(I-, add_on_minus)
  LayerOutput<T> remove_on_plus;   // G- applied to I+
  Tensor<T> fake_minus;            // composite(I+, remove_on_plus)
  LayerOutput<T> remove_on_fake;   // G- applied to fake_plus
  Tensor<T> recon_minus;
  LayerOutput<T> add_on_fake;      // G+ applied to fake_minus
  Tensor<T> recon_plus;
};

// AddOp/RemoveOp: Image -> LayerOutput. Generic so tests can pass hand-built
// operators; training uses the module overload below.
template <typename T, typename AddOp, typename RemoveOp>
CycleResult<T> cycle_losses_fn(AddOp&& add_op, RemoveOp&& remove_op, const Tensor<T>& image_minus,
                               const Tensor<T>& image_plus) {
  CycleResult<T> r;
  r.add_on_minus = add_op(image_minus);
  r.fake_plus = composite(image_minus, r.add_on_minus);
  r.remove_on_plus = remove_op(image_plus);
  r.fake_minus = composite(image_plus, r.remove_on_plus);

  r.remove_on_fake = remove_op(r.fake_plus);
  r.recon_minus = composite(r.fake_plus, r.remove_on_fake);
  r.add_on_fake = add_op(r.fake_minus);
  r.recon_plus = composite(r.fake_minus, r.add_on_fake);

  r.image_term = add(mean_abs(sub(r.recon_minus, image_minus)),
                     mean_abs(sub(r.recon_plus, image_plus)));
  r.mask_term = add(mean_abs(sub(r.add_on_minus.mask, r.remove_on_fake.mask)),
                    mean_abs(sub(r.remove_on_plus.mask, r.add_on_fake.mask)));
  r.total = add(r.image_term, r.mask_term);
  return r;
}

template <typename T>
CycleResult<T> cycle_losses(const nets::OperatorPair<T>& pair, const Tensor<T>& image_minus,
                            const Tensor<T>& image_plus) {
  return cycle_losses_fn<T>(
      [&](const Tensor<T>& img) { return nets::generator_forward(pair.add, img); },
      [&](const Tensor<T>& img) { return nets::generator_forward(pair.remove, img); }, image_minus,
      image_plus);
}

// L_D = sum_c adv_d(G+_c) + sum_c adv_d(G-_c) + lambda_cls * sum_c L^r_cls.
template <typename T>
Tensor<T> objective_d(const std::vector<Tensor<T>>& adv_d_terms,
                      const std::vector<Tensor<T>>& real_cls_losses, const LossWeights& w) {
  w.validate();
  Tensor<T> total = Tensor<T>::scalar(T(0));
  for (const auto& t : adv_d_terms) total = add(total, t);
  Tensor<T> cls = Tensor<T>::scalar(T(0));
  for (const auto& t : real_cls_losses) cls = add(cls, t);
  return add(total, mul_scalar(cls, static_cast<T>(w.lambda_cls)));
}

// L_Gc = adv(G+_c) + adv(G-_c) + lambda_cls (cls+ + cls-) + lambda_cyc cyc
//        + lambda_reg reg.
template <typename T>
Tensor<T> objective_g(const Tensor<T>& adv_g_plus, const Tensor<T>& adv_g_minus,
                      const Tensor<T>& cls_plus, const Tensor<T>& cls_minus,
                      const Tensor<T>& cycle_total, const Tensor<T>& reg, const LossWeights& w) {
  w.validate();
  Tensor<T> total = add(adv_g_plus, adv_g_minus);
  total = add(total, mul_scalar(add(cls_plus, cls_minus), static_cast<T>(w.lambda_cls)));
  total = add(total, mul_scalar(cycle_total, static_cast<T>(w.lambda_cyc)));
  total = add(total, mul_scalar(reg, static_cast<T>(w.lambda_reg)));
  return total;
}

// Label vectors as batch tensors for the classification loss.
template <typename T>
Tensor<T> labels_to_tensor(const std::vector<std::vector<int>>& labels) {
  if (labels.empty()) throw std::invalid_argument("labels_to_tensor: empty batch");
  const int64_t n = static_cast<int64_t>(labels.size());
  const int64_t k = static_cast<int64_t>(labels[0].size());
  std::vector<T> v;
  v.reserve(static_cast<size_t>(n * k));
  for (const auto& row : labels) {
    if (static_cast<int64_t>(row.size()) != k) {
      throw std::invalid_argument("labels_to_tensor: ragged label batch");
    }
    for (int x : row) v.push_back(static_cast<T>(x));
  }
  return Tensor<T>::leaf({n, k}, std::move(v));
}

}  // namespace lgan::losses
