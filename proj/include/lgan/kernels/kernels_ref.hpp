#pragma once

#include <cmath>
#include <cstdint>

namespace lgan::kern::ref {

// Scalar reference kernels. These are the ground truth the SIMD variants are
// equivalence-tested against, and the only implementations used for the
// 64-bit gradient-check path.

// C[M x N] = A[M x K] * B[K x N], optionally accumulating into C.
template <typename T>
void gemm_nn(int64_t M, int64_t N, int64_t K, const T* A, int64_t lda, const T* B, int64_t ldb,
             T* C, int64_t ldc, bool accumulate) {
  for (int64_t i = 0; i < M; ++i) {
    T* c = C + i * ldc;
    if (!accumulate) {
      for (int64_t j = 0; j < N; ++j) c[j] = T(0);
    }
    const T* a = A + i * lda;
    for (int64_t k = 0; k < K; ++k) {
      const T av = a[k];
      const T* b = B + k * ldb;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M x N] = A[M x K] * B^T where B is [N x K].
template <typename T>
void gemm_nt(int64_t M, int64_t N, int64_t K, const T* A, int64_t lda, const T* B, int64_t ldb,
             T* C, int64_t ldc, bool accumulate) {
  for (int64_t i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    for (int64_t j = 0; j < N; ++j) {
      const T* b = B + j * ldb;
      T s = T(0);
      for (int64_t k = 0; k < K; ++k) s += a[k] * b[k];
      C[i * ldc + j] = accumulate ? C[i * ldc + j] + s : s;
    }
  }
}

template <typename T>
void add(int64_t n, const T* a, const T* b, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub(int64_t n, const T* a, const T* b, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul(int64_t n, const T* a, const T* b, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

// y += alpha * x
template <typename T>
void axpy(int64_t n, T alpha, const T* x, T* y) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(int64_t n, T alpha, const T* x, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void relu_fwd(int64_t n, const T* x, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

// dx += dy where x > 0 (derivative at exactly 0 is taken as 0).
template <typename T>
void relu_bwd(int64_t n, const T* x, const T* dy, T* dx) {
  for (int64_t i = 0; i < n; ++i) {
    if (x[i] > T(0)) dx[i] += dy[i];
  }
}

template <typename T>
void lrelu_fwd(int64_t n, T slope, const T* x, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void lrelu_bwd(int64_t n, T slope, const T* x, const T* dy, T* dx) {
  for (int64_t i = 0; i < n; ++i) dx[i] += x[i] > T(0) ? dy[i] : slope * dy[i];
}

template <typename T>
double reduce_sum(int64_t n, const T* x) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

template <typename T>
double reduce_sumsq(int64_t n, const T* x) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return s;
}

template <typename T>
double reduce_abssum(int64_t n, const T* x) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::abs(static_cast<double>(x[i]));
  return s;
}

}  // namespace lgan::kern::ref
