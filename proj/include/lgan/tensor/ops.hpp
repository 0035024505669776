#pragma once

#include <cmath>
#include <cstring>

#include "lgan/core/parallel.hpp"
#include "lgan/kernels/kernels.hpp"
#include "lgan/kernels/kernels_ref.hpp"
#include "lgan/tensor/tensor.hpp"

namespace lgan {

namespace detail {

// Kernel shim: float32 goes through the runtime-dispatched table, every other
// scalar type uses the reference templates directly.
template <typename T>
struct K {
  static void gemm_nn(int64_t M, int64_t N, int64_t Kd, const T* A, int64_t lda, const T* B,
                      int64_t ldb, T* C, int64_t ldc, bool acc) {
    kern::ref::gemm_nn(M, N, Kd, A, lda, B, ldb, C, ldc, acc);
  }
  static void gemm_nt(int64_t M, int64_t N, int64_t Kd, const T* A, int64_t lda, const T* B,
                      int64_t ldb, T* C, int64_t ldc, bool acc) {
    kern::ref::gemm_nt(M, N, Kd, A, lda, B, ldb, C, ldc, acc);
  }
  static void add(int64_t n, const T* a, const T* b, T* o) { kern::ref::add(n, a, b, o); }
  static void sub(int64_t n, const T* a, const T* b, T* o) { kern::ref::sub(n, a, b, o); }
  static void mul(int64_t n, const T* a, const T* b, T* o) { kern::ref::mul(n, a, b, o); }
  static void axpy(int64_t n, T al, const T* x, T* y) { kern::ref::axpy(n, al, x, y); }
  static void scale(int64_t n, T al, const T* x, T* o) { kern::ref::scale(n, al, x, o); }
  static void relu_fwd(int64_t n, const T* x, T* o) { kern::ref::relu_fwd(n, x, o); }
  static void relu_bwd(int64_t n, const T* x, const T* dy, T* dx) { kern::ref::relu_bwd(n, x, dy, dx); }
  static void lrelu_fwd(int64_t n, T s, const T* x, T* o) { kern::ref::lrelu_fwd(n, s, x, o); }
  static void lrelu_bwd(int64_t n, T s, const T* x, const T* dy, T* dx) {
    kern::ref::lrelu_bwd(n, s, x, dy, dx);
  }
  static double reduce_sum(int64_t n, const T* x) { return kern::ref::reduce_sum(n, x); }
  static double reduce_sumsq(int64_t n, const T* x) { return kern::ref::reduce_sumsq(n, x); }
  static double reduce_abssum(int64_t n, const T* x) { return kern::ref::reduce_abssum(n, x); }
};

template <>
struct K<float> {
  static void gemm_nn(int64_t M, int64_t N, int64_t Kd, const float* A, int64_t lda,
                      const float* B, int64_t ldb, float* C, int64_t ldc, bool acc) {
    kern::table().gemm_nn(M, N, Kd, A, lda, B, ldb, C, ldc, acc);
  }
  static void gemm_nt(int64_t M, int64_t N, int64_t Kd, const float* A, int64_t lda,
                      const float* B, int64_t ldb, float* C, int64_t ldc, bool acc) {
    kern::table().gemm_nt(M, N, Kd, A, lda, B, ldb, C, ldc, acc);
  }
  static void add(int64_t n, const float* a, const float* b, float* o) { kern::table().add(n, a, b, o); }
  static void sub(int64_t n, const float* a, const float* b, float* o) { kern::table().sub(n, a, b, o); }
  static void mul(int64_t n, const float* a, const float* b, float* o) { kern::table().mul(n, a, b, o); }
  static void axpy(int64_t n, float al, const float* x, float* y) { kern::table().axpy(n, al, x, y); }
  static void scale(int64_t n, float al, const float* x, float* o) { kern::table().scale(n, al, x, o); }
  static void relu_fwd(int64_t n, const float* x, float* o) { kern::table().relu_fwd(n, x, o); }
  static void relu_bwd(int64_t n, const float* x, const float* dy, float* dx) {
    kern::table().relu_bwd(n, x, dy, dx);
  }
  static void lrelu_fwd(int64_t n, float s, const float* x, float* o) { kern::table().lrelu_fwd(n, s, x, o); }
  static void lrelu_bwd(int64_t n, float s, const float* x, const float* dy, float* dx) {
    kern::table().lrelu_bwd(n, s, x, dy, dx);
  }
  static double reduce_sum(int64_t n, const float* x) { return kern::table().reduce_sum(n, x); }
  static double reduce_sumsq(int64_t n, const float* x) { return kern::table().reduce_sumsq(n, x); }
  static double reduce_abssum(int64_t n, const float* x) { return kern::table().reduce_abssum(n, x); }
};

constexpr int64_t kParGrain = 1 << 15;

}  // namespace detail

// ---- elementwise binary ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("add", a, b);
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain,
               [&](int64_t lo, int64_t hi) { detail::K<T>::add(hi - lo, a.data().data() + lo, b.data().data() + lo, out.data() + lo); });
  return detail::make_op<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    for (int p = 0; p < 2; ++p) {
      auto& par = *n.parents[p];
      if (!par.needs_grad) continue;
      par.ensure_grad();
      detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(1), n.grad.data(), par.grad.data());
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain,
               [&](int64_t lo, int64_t hi) { detail::K<T>::sub(hi - lo, a.data().data() + lo, b.data().data() + lo, out.data() + lo); });
  return detail::make_op<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.needs_grad) {
      pa.ensure_grad();
      detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(1), n.grad.data(), pa.grad.data());
    }
    if (pb.needs_grad) {
      pb.ensure_grad();
      detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(-1), n.grad.data(), pb.grad.data());
    }
  });
}

// Elementwise (Hadamard) product.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain,
               [&](int64_t lo, int64_t hi) { detail::K<T>::mul(hi - lo, a.data().data() + lo, b.data().data() + lo, out.data() + lo); });
  return detail::make_op<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    const int64_t cnt = static_cast<int64_t>(n.grad.size());
    if (pa.needs_grad) {
      pa.ensure_grad();
      const T* g = n.grad.data();
      const T* bv = pb.val.data();
      T* dst = pa.grad.data();
      parallel_for(cnt, detail::kParGrain, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) dst[i] += g[i] * bv[i];
      });
    }
    if (pb.needs_grad) {
      pb.ensure_grad();
      const T* g = n.grad.data();
      const T* av = pa.val.data();
      T* dst = pb.grad.data();
      parallel_for(cnt, detail::kParGrain, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) dst[i] += g[i] * av[i];
      });
    }
  });
}

// ---- scalar ops ----

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + s;
  return detail::make_op<T>("add_scalar", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(1), n.grad.data(), pa.grad.data());
  });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data().size());
  detail::K<T>::scale(a.numel(), s, a.data().data(), out.data());
  return detail::make_op<T>("mul_scalar", a.shape(), std::move(out), {a}, [s](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), s, n.grad.data(), pa.grad.data());
  });
}

// s - a, e.g. the (1 - M) factor of mask compositing.
template <typename T>
Tensor<T> scalar_sub(T s, const Tensor<T>& a) {
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = s - a.data()[i];
  return detail::make_op<T>("scalar_sub", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(-1), n.grad.data(), pa.grad.data());
  });
}

// ---- activations ----

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  auto& watch = detail::kink_watch();
  if (watch.enabled) {
    for (const T& v : a.data()) {
      if (v == T(0)) watch.hit = true;
    }
  }
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain,
               [&](int64_t lo, int64_t hi) { detail::K<T>::relu_fwd(hi - lo, a.data().data() + lo, out.data() + lo); });
  return detail::make_op<T>("relu", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const int64_t cnt = static_cast<int64_t>(n.grad.size());
    parallel_for(cnt, detail::kParGrain, [&](int64_t lo, int64_t hi) {
      detail::K<T>::relu_bwd(hi - lo, pa.val.data() + lo, n.grad.data() + lo, pa.grad.data() + lo);
    });
  });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  auto& watch = detail::kink_watch();
  if (watch.enabled) {
    for (const T& v : a.data()) {
      if (v == T(0)) watch.hit = true;
    }
  }
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain, [&](int64_t lo, int64_t hi) {
    detail::K<T>::lrelu_fwd(hi - lo, slope, a.data().data() + lo, out.data() + lo);
  });
  return detail::make_op<T>("leaky_relu", a.shape(), std::move(out), {a}, [slope](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const int64_t cnt = static_cast<int64_t>(n.grad.size());
    parallel_for(cnt, detail::kParGrain, [&](int64_t lo, int64_t hi) {
      detail::K<T>::lrelu_bwd(hi - lo, slope, pa.val.data() + lo, n.grad.data() + lo, pa.grad.data() + lo);
    });
  });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) out[i] = std::tanh(a.data()[i]);
  });
  return detail::make_op<T>("tanh", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T* y = n.val.data();
    const T* g = n.grad.data();
    T* dst = pa.grad.data();
    parallel_for(static_cast<int64_t>(n.grad.size()), detail::kParGrain, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) dst[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> out(a.data().size());
  parallel_for(a.numel(), detail::kParGrain, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) out[i] = T(1) / (T(1) + std::exp(-a.data()[i]));
  });
  return detail::make_op<T>("sigmoid", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T* y = n.val.data();
    const T* g = n.grad.data();
    T* dst = pa.grad.data();
    parallel_for(static_cast<int64_t>(n.grad.size()), detail::kParGrain, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) dst[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) {
    if (a.data()[i] <= T(0)) throw std::invalid_argument("log: non-positive input");
    out[i] = std::log(a.data()[i]);
  }
  return detail::make_op<T>("log", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] / pa.val[i];
  });
}

template <typename T>
Tensor<T> sqrt_op(const Tensor<T>& a) {
  auto& watch = detail::kink_watch();
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) {
    if (a.data()[i] < T(0)) throw std::invalid_argument("sqrt: negative input");
    if (watch.enabled && a.data()[i] == T(0)) watch.hit = true;
    out[i] = std::sqrt(a.data()[i]);
  }
  return detail::make_op<T>("sqrt", a.shape(), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] / (T(2) * n.val[i]);
  });
}

// ---- reductions ----

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  const T s = static_cast<T>(detail::K<T>::reduce_sum(a.numel(), a.data().data()));
  return detail::make_op<T>("sum", {1}, {s}, {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T g = n.grad[0];
    for (auto& v : pa.grad) v += g;
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  const int64_t cnt = a.numel();
  const T s = static_cast<T>(detail::K<T>::reduce_sum(cnt, a.data().data()) / static_cast<double>(cnt));
  return detail::make_op<T>("mean", {1}, {s}, {a}, [cnt](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T g = n.grad[0] / static_cast<T>(cnt);
    for (auto& v : pa.grad) v += g;
  });
}

// Sum of squares (squared L2 norm).
template <typename T>
Tensor<T> sum_sq(const Tensor<T>& a) {
  const T s = static_cast<T>(detail::K<T>::reduce_sumsq(a.numel(), a.data().data()));
  return detail::make_op<T>("sum_sq", {1}, {s}, {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T g = n.grad[0];
    detail::K<T>::axpy(static_cast<int64_t>(pa.val.size()), T(2) * g, pa.val.data(), pa.grad.data());
  });
}

// Mean of squares; mean-normalized squared L2.
template <typename T>
Tensor<T> mean_sq(const Tensor<T>& a) {
  const int64_t cnt = a.numel();
  const T s = static_cast<T>(detail::K<T>::reduce_sumsq(cnt, a.data().data()) / static_cast<double>(cnt));
  return detail::make_op<T>("mean_sq", {1}, {s}, {a}, [cnt](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T g = T(2) * n.grad[0] / static_cast<T>(cnt);
    detail::K<T>::axpy(static_cast<int64_t>(pa.val.size()), g, pa.val.data(), pa.grad.data());
  });
}

// Mean of absolute values; mean-normalized L1. Derivative at 0 taken as 0.
template <typename T>
Tensor<T> mean_abs(const Tensor<T>& a) {
  auto& watch = detail::kink_watch();
  if (watch.enabled) {
    for (const T& v : a.data()) {
      if (v == T(0)) watch.hit = true;
    }
  }
  const int64_t cnt = a.numel();
  const T s = static_cast<T>(detail::K<T>::reduce_abssum(cnt, a.data().data()) / static_cast<double>(cnt));
  return detail::make_op<T>("mean_abs", {1}, {s}, {a}, [cnt](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const T g = n.grad[0] / static_cast<T>(cnt);
    for (size_t i = 0; i < pa.val.size(); ++i) {
      if (pa.val[i] > T(0)) {
        pa.grad[i] += g;
      } else if (pa.val[i] < T(0)) {
        pa.grad[i] -= g;
      }
    }
  });
}

// ---- shape ops ----

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (shape_numel(new_shape) != a.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                shape_str(new_shape));
  }
  std::vector<T> out = a.data();
  return detail::make_op<T>("reshape", std::move(new_shape), std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    detail::K<T>::axpy(static_cast<int64_t>(n.grad.size()), T(1), n.grad.data(), pa.grad.data());
  });
}

// Broadcasts a [N,1,H,W] map across channels to [N,C,H,W]; backward sums the
// channel gradients. This is the only broadcast the networks need (mask over
// RGB in the compositing equation).
template <typename T>
Tensor<T> expand_channel(const Tensor<T>& a, int64_t channels) {
  if (a.shape().size() != 4 || a.dim(1) != 1) {
    throw std::invalid_argument("expand_channel: expected [N,1,H,W], got " + shape_str(a.shape()));
  }
  const int64_t n = a.dim(0), hw = a.dim(2) * a.dim(3);
  std::vector<T> out(static_cast<size_t>(n * channels * hw));
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t c = 0; c < channels; ++c) {
      std::memcpy(out.data() + (i * channels + c) * hw, a.data().data() + i * hw, sizeof(T) * hw);
    }
  }
  return detail::make_op<T>("expand_channel", {n, channels, a.dim(2), a.dim(3)}, std::move(out),
                            {a}, [n, channels, hw](Node<T>& nd) {
                              auto& pa = *nd.parents[0];
                              pa.ensure_grad();
                              for (int64_t i = 0; i < n; ++i) {
                                for (int64_t c = 0; c < channels; ++c) {
                                  detail::K<T>::axpy(hw, T(1), nd.grad.data() + (i * channels + c) * hw,
                                                     pa.grad.data() + i * hw);
                                }
                              }
                            });
}

// Adds a length-K vector to every row of an [N,K] matrix (bias broadcast).
template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& mat, const Tensor<T>& vec) {
  if (mat.shape().size() != 2 || vec.numel() != mat.dim(1)) {
    throw std::invalid_argument("add_rowvec: incompatible shapes " + shape_str(mat.shape()) +
                                " vs " + shape_str(vec.shape()));
  }
  const int64_t n = mat.dim(0), k = mat.dim(1);
  std::vector<T> out(mat.data().size());
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < k; ++j) out[i * k + j] = mat.data()[i * k + j] + vec.data()[j];
  }
  return detail::make_op<T>("add_rowvec", mat.shape(), std::move(out), {mat, vec},
                            [n, k](Node<T>& nd) {
                              auto& pm = *nd.parents[0];
                              auto& pv = *nd.parents[1];
                              if (pm.needs_grad) {
                                pm.ensure_grad();
                                detail::K<T>::axpy(n * k, T(1), nd.grad.data(), pm.grad.data());
                              }
                              if (pv.needs_grad) {
                                pv.ensure_grad();
                                for (int64_t i = 0; i < n; ++i) {
                                  for (int64_t j = 0; j < k; ++j) pv.grad[j] += nd.grad[i * k + j];
                                }
                              }
                            });
}

// ---- matmul ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const int64_t M = a.dim(0), Kd = a.dim(1), N = b.dim(1);
  std::vector<T> out(static_cast<size_t>(M * N));
  detail::K<T>::gemm_nn(M, N, Kd, a.data().data(), Kd, b.data().data(), N, out.data(), N, false);
  return detail::make_op<T>("matmul", {M, N}, std::move(out), {a, b}, [M, Kd, N](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.needs_grad) {
      pa.ensure_grad();
      // dA += dC * B^T
      detail::K<T>::gemm_nt(M, Kd, N, n.grad.data(), N, pb.val.data(), N, pa.grad.data(), Kd, true);
    }
    if (pb.needs_grad) {
      pb.ensure_grad();
      // dB += A^T * dC
      std::vector<T> at(static_cast<size_t>(Kd * M));
      for (int64_t i = 0; i < M; ++i)
        for (int64_t k = 0; k < Kd; ++k) at[k * M + i] = pa.val[i * Kd + k];
      detail::K<T>::gemm_nn(Kd, N, M, at.data(), M, n.grad.data(), N, pb.grad.data(), N, true);
    }
  });
}

// ---- instance normalization ----

// Per-sample, per-channel normalization over the spatial extent, no learned
// affine. eps defaults to 1e-5.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps = static_cast<T>(1e-5)) {
  if (x.shape().size() != 4) {
    throw std::invalid_argument("instance_norm: expected [N,C,H,W], got " + shape_str(x.shape()));
  }
  const int64_t groups = x.dim(0) * x.dim(1);
  const int64_t hw = x.dim(2) * x.dim(3);
  std::vector<T> out(x.data().size());
  auto istd = std::make_shared<std::vector<T>>(static_cast<size_t>(groups));
  parallel_for(groups, 1, [&](int64_t g0, int64_t g1) {
    for (int64_t g = g0; g < g1; ++g) {
      const T* p = x.data().data() + g * hw;
      const double mean = detail::K<T>::reduce_sum(hw, p) / static_cast<double>(hw);
      const double sq = detail::K<T>::reduce_sumsq(hw, p) / static_cast<double>(hw);
      const double var = sq - mean * mean;
      const T is = static_cast<T>(1.0 / std::sqrt(std::max(var, 0.0) + static_cast<double>(eps)));
      (*istd)[g] = is;
      T* o = out.data() + g * hw;
      const T mu = static_cast<T>(mean);
      for (int64_t i = 0; i < hw; ++i) o[i] = (p[i] - mu) * is;
    }
  });
  return detail::make_op<T>("instance_norm", x.shape(), std::move(out), {x},
                            [groups, hw, istd](Node<T>& n) {
                              auto& pa = *n.parents[0];
                              pa.ensure_grad();
                              parallel_for(groups, 1, [&](int64_t g0, int64_t g1) {
                                for (int64_t g = g0; g < g1; ++g) {
                                  const T* y = n.val.data() + g * hw;
                                  const T* dy = n.grad.data() + g * hw;
                                  T* dx = pa.grad.data() + g * hw;
                                  double sum_dy = 0, sum_dyy = 0;
                                  for (int64_t i = 0; i < hw; ++i) {
                                    sum_dy += static_cast<double>(dy[i]);
                                    sum_dyy += static_cast<double>(dy[i]) * static_cast<double>(y[i]);
                                  }
                                  const T mean_dy = static_cast<T>(sum_dy / hw);
                                  const T mean_dyy = static_cast<T>(sum_dyy / hw);
                                  const T is = (*istd)[g];
                                  for (int64_t i = 0; i < hw; ++i) {
                                    dx[i] += is * (dy[i] - mean_dy - y[i] * mean_dyy);
                                  }
                                }
                              });
                            });
}

}  // namespace lgan
