#pragma once

#include <cstdint>
#include <string>

namespace lgan::kern {

// Single-threaded float32 primitives. Callers split work across threads by
// invoking these on disjoint row/column spans; the kernels themselves never
// spawn work, which keeps results independent of the thread count.
struct KernelTable {
  void (*gemm_nn)(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda, const float* B,
                  int64_t ldb, float* C, int64_t ldc, bool accumulate);
  void (*gemm_nt)(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda, const float* B,
                  int64_t ldb, float* C, int64_t ldc, bool accumulate);
  void (*add)(int64_t n, const float* a, const float* b, float* out);
  void (*sub)(int64_t n, const float* a, const float* b, float* out);
  void (*mul)(int64_t n, const float* a, const float* b, float* out);
  void (*axpy)(int64_t n, float alpha, const float* x, float* y);
  void (*scale)(int64_t n, float alpha, const float* x, float* out);
  void (*relu_fwd)(int64_t n, const float* x, float* out);
  void (*relu_bwd)(int64_t n, const float* x, const float* dy, float* dx);
  void (*lrelu_fwd)(int64_t n, float slope, const float* x, float* out);
  void (*lrelu_bwd)(int64_t n, float slope, const float* x, const float* dy, float* dx);
  double (*reduce_sum)(int64_t n, const float* x);
  double (*reduce_sumsq)(int64_t n, const float* x);
  double (*reduce_abssum)(int64_t n, const float* x);
};

// Active table, selected once at startup: AVX2+FMA when the CPU supports it,
// scalar otherwise. LGAN_SIMD=scalar|avx2 forces a backend.
const KernelTable& table();

// Backend name of the active table ("avx2" or "scalar").
const std::string& backend_name();

// Both variants are always exposed so equivalence tests can compare them.
const KernelTable& scalar_table();
// Null when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

}  // namespace lgan::kern
