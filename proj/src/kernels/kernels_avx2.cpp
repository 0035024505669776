// AVX2+FMA variants of the float32 kernels. This translation unit is compiled
// with -mavx2 -mfma; the dispatcher only installs it after a runtime CPUID
// check, so the rest of the binary stays runnable on baseline x86-64.

#include "lgan/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace lgan::kern {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

inline double hsum4d(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

thread_local std::vector<float> g_pack;

// 4 rows x 16 columns of C against a packed K x 16 slab of B.
inline void micro_4x16(int64_t K, const float* a0, const float* a1, const float* a2,
                       const float* a3, const float* bp, float* c0, float* c1, float* c2,
                       float* c3, bool accumulate) {
  __m256 acc00, acc01, acc10, acc11, acc20, acc21, acc30, acc31;
  if (accumulate) {
    acc00 = _mm256_loadu_ps(c0); acc01 = _mm256_loadu_ps(c0 + 8);
    acc10 = _mm256_loadu_ps(c1); acc11 = _mm256_loadu_ps(c1 + 8);
    acc20 = _mm256_loadu_ps(c2); acc21 = _mm256_loadu_ps(c2 + 8);
    acc30 = _mm256_loadu_ps(c3); acc31 = _mm256_loadu_ps(c3 + 8);
  } else {
    acc00 = acc01 = acc10 = acc11 = acc20 = acc21 = acc30 = acc31 = _mm256_setzero_ps();
  }
  for (int64_t k = 0; k < K; ++k) {
    const __m256 b0 = _mm256_loadu_ps(bp + k * 16);
    const __m256 b1 = _mm256_loadu_ps(bp + k * 16 + 8);
    __m256 av = _mm256_broadcast_ss(a0 + k);
    acc00 = _mm256_fmadd_ps(av, b0, acc00);
    acc01 = _mm256_fmadd_ps(av, b1, acc01);
    av = _mm256_broadcast_ss(a1 + k);
    acc10 = _mm256_fmadd_ps(av, b0, acc10);
    acc11 = _mm256_fmadd_ps(av, b1, acc11);
    av = _mm256_broadcast_ss(a2 + k);
    acc20 = _mm256_fmadd_ps(av, b0, acc20);
    acc21 = _mm256_fmadd_ps(av, b1, acc21);
    av = _mm256_broadcast_ss(a3 + k);
    acc30 = _mm256_fmadd_ps(av, b0, acc30);
    acc31 = _mm256_fmadd_ps(av, b1, acc31);
  }
  _mm256_storeu_ps(c0, acc00); _mm256_storeu_ps(c0 + 8, acc01);
  _mm256_storeu_ps(c1, acc10); _mm256_storeu_ps(c1 + 8, acc11);
  _mm256_storeu_ps(c2, acc20); _mm256_storeu_ps(c2 + 8, acc21);
  _mm256_storeu_ps(c3, acc30); _mm256_storeu_ps(c3 + 8, acc31);
}

inline void micro_1x16(int64_t K, const float* a, const float* bp, float* c, bool accumulate) {
  __m256 acc0, acc1;
  if (accumulate) {
    acc0 = _mm256_loadu_ps(c);
    acc1 = _mm256_loadu_ps(c + 8);
  } else {
    acc0 = acc1 = _mm256_setzero_ps();
  }
  for (int64_t k = 0; k < K; ++k) {
    const __m256 av = _mm256_broadcast_ss(a + k);
    acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + k * 16), acc0);
    acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + k * 16 + 8), acc1);
  }
  _mm256_storeu_ps(c, acc0);
  _mm256_storeu_ps(c + 8, acc1);
}

void gemm_nn_avx2(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda, const float* B,
                  int64_t ldb, float* C, int64_t ldc, bool accumulate) {
  if (M <= 0 || N <= 0) return;
  if (K <= 0) {
    if (!accumulate) {
      for (int64_t i = 0; i < M; ++i) std::memset(C + i * ldc, 0, sizeof(float) * N);
    }
    return;
  }
  if (g_pack.size() < static_cast<size_t>(K) * 16) g_pack.resize(static_cast<size_t>(K) * 16);
  float* bp = g_pack.data();
  float ctmp[4 * 16];

  for (int64_t j0 = 0; j0 < N; j0 += 16) {
    const int64_t jw = std::min<int64_t>(16, N - j0);
    // Pack the B column slab, zero-padding past N so the microkernel can
    // always run full width.
    if (jw == 16) {
      for (int64_t k = 0; k < K; ++k) std::memcpy(bp + k * 16, B + k * ldb + j0, 16 * sizeof(float));
    } else {
      for (int64_t k = 0; k < K; ++k) {
        std::memcpy(bp + k * 16, B + k * ldb + j0, jw * sizeof(float));
        std::memset(bp + k * 16 + jw, 0, (16 - jw) * sizeof(float));
      }
    }
    int64_t i = 0;
    for (; i + 4 <= M; i += 4) {
      const float* a0 = A + i * lda;
      const float* a1 = a0 + lda;
      const float* a2 = a1 + lda;
      const float* a3 = a2 + lda;
      if (jw == 16) {
        micro_4x16(K, a0, a1, a2, a3, bp, C + i * ldc + j0, C + (i + 1) * ldc + j0,
                   C + (i + 2) * ldc + j0, C + (i + 3) * ldc + j0, accumulate);
      } else {
        for (int r = 0; r < 4; ++r) {
          std::memset(ctmp + r * 16, 0, sizeof(float) * 16u);
          if (accumulate) std::memcpy(ctmp + r * 16, C + (i + r) * ldc + j0, jw * sizeof(float));
        }
        micro_4x16(K, a0, a1, a2, a3, bp, ctmp, ctmp + 16, ctmp + 32, ctmp + 48, true);
        for (int r = 0; r < 4; ++r) std::memcpy(C + (i + r) * ldc + j0, ctmp + r * 16, jw * sizeof(float));
      }
    }
    for (; i < M; ++i) {
      if (jw == 16) {
        micro_1x16(K, A + i * lda, bp, C + i * ldc + j0, accumulate);
      } else {
        std::memset(ctmp, 0, sizeof(float) * 16u);
        if (accumulate) std::memcpy(ctmp, C + i * ldc + j0, jw * sizeof(float));
        micro_1x16(K, A + i * lda, bp, ctmp, true);
        std::memcpy(C + i * ldc + j0, ctmp, jw * sizeof(float));
      }
    }
  }
}

void gemm_nt_avx2(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda, const float* B,
                  int64_t ldb, float* C, int64_t ldc, bool accumulate) {
  const int64_t k8 = K - (K % 8);
  for (int64_t i = 0; i < M; ++i) {
    const float* a = A + i * lda;
    int64_t j = 0;
    for (; j + 4 <= N; j += 4) {
      const float* b0 = B + j * ldb;
      const float* b1 = b0 + ldb;
      const float* b2 = b1 + ldb;
      const float* b3 = b2 + ldb;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
      __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
      for (int64_t k = 0; k < k8; k += 8) {
        const __m256 av = _mm256_loadu_ps(a + k);
        s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + k), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + k), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + k), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + k), s3);
      }
      float d0 = hsum8(s0), d1 = hsum8(s1), d2 = hsum8(s2), d3 = hsum8(s3);
      for (int64_t k = k8; k < K; ++k) {
        d0 += a[k] * b0[k];
        d1 += a[k] * b1[k];
        d2 += a[k] * b2[k];
        d3 += a[k] * b3[k];
      }
      float* c = C + i * ldc + j;
      if (accumulate) {
        c[0] += d0; c[1] += d1; c[2] += d2; c[3] += d3;
      } else {
        c[0] = d0; c[1] = d1; c[2] = d2; c[3] = d3;
      }
    }
    for (; j < N; ++j) {
      const float* b = B + j * ldb;
      __m256 s = _mm256_setzero_ps();
      for (int64_t k = 0; k < k8; k += 8) s = _mm256_fmadd_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k), s);
      float d = hsum8(s);
      for (int64_t k = k8; k < K; ++k) d += a[k] * b[k];
      if (accumulate) {
        C[i * ldc + j] += d;
      } else {
        C[i * ldc + j] = d;
      }
    }
  }
}

void add_avx2(int64_t n, const float* a, const float* b, float* out) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(int64_t n, const float* a, const float* b, float* out) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(int64_t n, const float* a, const float* b, float* out) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(int64_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale_avx2(int64_t n, float alpha, const float* x, float* out) {
  const __m256 av = _mm256_set1_ps(alpha);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu_fwd_avx2(int64_t n, const float* x, float* out) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_max_ps(z, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = x[i] > 0.f ? x[i] : 0.f;
}

void relu_bwd_avx2(int64_t n, const float* x, const float* dy, float* dx) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
    const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(dy + i));
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), g));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.f) dx[i] += dy[i];
  }
}

void lrelu_fwd_avx2(int64_t n, float slope, const float* x, float* out) {
  const __m256 sv = _mm256_set1_ps(slope);
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 xv = _mm256_loadu_ps(x + i);
    const __m256 mask = _mm256_cmp_ps(xv, z, _CMP_GT_OQ);
    _mm256_storeu_ps(out + i, _mm256_blendv_ps(_mm256_mul_ps(sv, xv), xv, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.f ? x[i] : slope * x[i];
}

void lrelu_bwd_avx2(int64_t n, float slope, const float* x, const float* dy, float* dx) {
  const __m256 sv = _mm256_set1_ps(slope);
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 dyv = _mm256_loadu_ps(dy + i);
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
    const __m256 g = _mm256_blendv_ps(_mm256_mul_ps(sv, dyv), dyv, mask);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), g));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.f ? dy[i] : slope * dy[i];
}

// Reductions accumulate in double lanes so scalar and SIMD results agree to
// high precision on multi-million element buffers.
double reduce_sum_avx2(int64_t n, const float* x) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    s0 = _mm256_add_pd(s0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    s1 = _mm256_add_pd(s1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double s = hsum4d(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

double reduce_sumsq_avx2(int64_t n, const float* x) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    s0 = _mm256_fmadd_pd(lo, lo, s0);
    s1 = _mm256_fmadd_pd(hi, hi, s1);
  }
  double s = hsum4d(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return s;
}

double reduce_abssum_avx2(int64_t n, const float* x) {
  const __m256 signmask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_and_ps(signmask, _mm256_loadu_ps(x + i));
    s0 = _mm256_add_pd(s0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    s1 = _mm256_add_pd(s1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double s = hsum4d(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += std::abs(static_cast<double>(x[i]));
  return s;
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable t = {
      &gemm_nn_avx2, &gemm_nt_avx2, &add_avx2,      &sub_avx2,      &mul_avx2,
      &axpy_avx2,    &scale_avx2,   &relu_fwd_avx2, &relu_bwd_avx2, &lrelu_fwd_avx2,
      &lrelu_bwd_avx2, &reduce_sum_avx2, &reduce_sumsq_avx2, &reduce_abssum_avx2,
  };
  return &t;
}

}  // namespace lgan::kern

#else

namespace lgan::kern {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace lgan::kern

#endif
