#pragma once

#include "lgan/tensor/ops.hpp"

namespace lgan {

namespace detail {

// Gathers kernel-window patches of a [C, bigH, bigW] plane into a
// [C*K*K, smallH*smallW] matrix. Out-of-range taps read as zero. The same
// geometry serves convolution forward (big = input) and transposed
// convolution backward (big = output gradient).
template <typename T>
void im2col(const T* big, int64_t C, int64_t bigH, int64_t bigW, int64_t smallH, int64_t smallW,
            int64_t K, int64_t stride, int64_t pad, T* col) {
  const int64_t plane = bigH * bigW;
  const int64_t cols = smallH * smallW;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t kh = 0; kh < K; ++kh) {
      for (int64_t kw = 0; kw < K; ++kw) {
        T* dst = col + ((c * K + kh) * K + kw) * cols;
        for (int64_t ih = 0; ih < smallH; ++ih) {
          const int64_t bh = ih * stride + kh - pad;
          T* row = dst + ih * smallW;
          if (bh < 0 || bh >= bigH) {
            std::memset(row, 0, sizeof(T) * smallW);
            continue;
          }
          const T* src = big + c * plane + bh * bigW;
          if (stride == 1) {
            // Contiguous source segment, clipped at the plane borders.
            const int64_t bw0 = kw - pad;
            int64_t lo = std::max<int64_t>(0, -bw0);
            int64_t hi = std::min<int64_t>(smallW, bigW - bw0);
            if (lo > 0) std::memset(row, 0, sizeof(T) * std::min(lo, smallW));
            if (hi < smallW) std::memset(row + std::max<int64_t>(hi, 0), 0, sizeof(T) * (smallW - std::max<int64_t>(hi, 0)));
            if (hi > lo) std::memcpy(row + lo, src + bw0 + lo, sizeof(T) * (hi - lo));
          } else {
            for (int64_t iw = 0; iw < smallW; ++iw) {
              const int64_t bw = iw * stride + kw - pad;
              row[iw] = (bw >= 0 && bw < bigW) ? src[bw] : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-add inverse of im2col; accumulates into big.
template <typename T>
void col2im(const T* col, int64_t C, int64_t bigH, int64_t bigW, int64_t smallH, int64_t smallW,
            int64_t K, int64_t stride, int64_t pad, T* big) {
  const int64_t plane = bigH * bigW;
  const int64_t cols = smallH * smallW;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t kh = 0; kh < K; ++kh) {
      for (int64_t kw = 0; kw < K; ++kw) {
        const T* src = col + ((c * K + kh) * K + kw) * cols;
        for (int64_t ih = 0; ih < smallH; ++ih) {
          const int64_t bh = ih * stride + kh - pad;
          if (bh < 0 || bh >= bigH) continue;
          T* dstrow = big + c * plane + bh * bigW;
          const T* srow = src + ih * smallW;
          for (int64_t iw = 0; iw < smallW; ++iw) {
            const int64_t bw = iw * stride + kw - pad;
            if (bw >= 0 && bw < bigW) dstrow[bw] += srow[iw];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& conv_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

template <typename T>
std::vector<T> transpose2d(const T* a, int64_t rows, int64_t cols) {
  std::vector<T> out(static_cast<size_t>(rows * cols));
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
  return out;
}

}  // namespace detail

// 2-D convolution, NCHW input, [Cout,Cin,K,K] weights, zero padding.
// bias may be an undefined tensor to skip it (convs feeding instance norm
// have no usable bias since the norm cancels it).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int64_t stride,
                 int64_t pad) {
  if (x.shape().size() != 4 || w.shape().size() != 4 || w.dim(2) != w.dim(3)) {
    throw std::invalid_argument("conv2d: bad shapes " + shape_str(x.shape()) + ", " +
                                shape_str(w.shape()));
  }
  if (x.dim(1) != w.dim(1)) {
    throw std::invalid_argument("conv2d: input channels " + shape_str(x.shape()) +
                                " do not match weight " + shape_str(w.shape()));
  }
  const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Cout = w.dim(0), K = w.dim(2);
  const int64_t OH = (H + 2 * pad - K) / stride + 1;
  const int64_t OW = (W + 2 * pad - K) / stride + 1;
  if (OH < 1 || OW < 1) throw std::invalid_argument("conv2d: empty output for input " + shape_str(x.shape()));
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != Cout) {
    throw std::invalid_argument("conv2d: bias size mismatch");
  }
  const int64_t ckk = Cin * K * K, ohw = OH * OW, ihw = Cin * H * W;

  std::vector<T> out(static_cast<size_t>(N * Cout * ohw));
  const T* bptr = has_bias ? bias.data().data() : nullptr;
  parallel_for(N, 1, [&](int64_t n0, int64_t n1) {
    auto& col = detail::conv_scratch<T>();
    if (col.size() < static_cast<size_t>(ckk * ohw)) col.resize(static_cast<size_t>(ckk * ohw));
    for (int64_t n = n0; n < n1; ++n) {
      detail::im2col(x.data().data() + n * ihw, Cin, H, W, OH, OW, K, stride, pad, col.data());
      T* y = out.data() + n * Cout * ohw;
      detail::K<T>::gemm_nn(Cout, ohw, ckk, w.data().data(), ckk, col.data(), ohw, y, ohw, false);
      if (bptr) {
        for (int64_t c = 0; c < Cout; ++c) {
          const T b = bptr[c];
          T* row = y + c * ohw;
          for (int64_t i = 0; i < ohw; ++i) row[i] += b;
        }
      }
    }
  });

  std::vector<Tensor<T>> parents = {x, w};
  if (has_bias) parents.push_back(bias);
  return detail::make_op<T>(
      "conv2d", {N, Cout, OH, OW}, std::move(out), std::move(parents),
      [N, Cin, H, W, Cout, K, OH, OW, stride, pad, ckk, ohw, ihw, has_bias](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& pw = *nd.parents[1];
        if (px.needs_grad) {
          px.ensure_grad();
          const auto wt = detail::transpose2d(pw.val.data(), Cout, ckk);
          parallel_for(N, 1, [&](int64_t n0, int64_t n1) {
            auto& dcol = detail::conv_scratch<T>();
            if (dcol.size() < static_cast<size_t>(ckk * ohw)) dcol.resize(static_cast<size_t>(ckk * ohw));
            for (int64_t n = n0; n < n1; ++n) {
              detail::K<T>::gemm_nn(ckk, ohw, Cout, wt.data(), Cout, nd.grad.data() + n * Cout * ohw,
                                    ohw, dcol.data(), ohw, false);
              detail::col2im(dcol.data(), Cin, H, W, OH, OW, K, stride, pad, px.grad.data() + n * ihw);
            }
          });
        }
        if (pw.needs_grad) {
          pw.ensure_grad();
          auto& col = detail::conv_scratch<T>();
          if (col.size() < static_cast<size_t>(ckk * ohw)) col.resize(static_cast<size_t>(ckk * ohw));
          for (int64_t n = 0; n < N; ++n) {
            detail::im2col(px.val.data() + n * ihw, Cin, H, W, OH, OW, K, stride, pad, col.data());
            const T* dy = nd.grad.data() + n * Cout * ohw;
            T* dw = pw.grad.data();
            parallel_for(Cout, 16, [&](int64_t r0, int64_t r1) {
              detail::K<T>::gemm_nt(r1 - r0, ckk, ohw, dy + r0 * ohw, ohw, col.data(), ohw,
                                    dw + r0 * ckk, ckk, true);
            });
          }
        }
        if (has_bias && nd.parents[2]->needs_grad) {
          auto& pb = *nd.parents[2];
          pb.ensure_grad();
          for (int64_t n = 0; n < N; ++n) {
            for (int64_t c = 0; c < Cout; ++c) {
              pb.grad[c] += static_cast<T>(
                  detail::K<T>::reduce_sum(ohw, nd.grad.data() + (n * Cout + c) * ohw));
            }
          }
        }
      });
}

// Transposed 2-D convolution, weights [Cin,Cout,K,K]. out_pad grows the
// output on the bottom/right edge so stride-2 upsampling can exactly double
// the spatial size.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           int64_t stride, int64_t pad, int64_t out_pad = 0) {
  if (x.shape().size() != 4 || w.shape().size() != 4 || w.dim(2) != w.dim(3)) {
    throw std::invalid_argument("conv_transpose2d: bad shapes " + shape_str(x.shape()) + ", " +
                                shape_str(w.shape()));
  }
  if (x.dim(1) != w.dim(0)) {
    throw std::invalid_argument("conv_transpose2d: input channels " + shape_str(x.shape()) +
                                " do not match weight " + shape_str(w.shape()));
  }
  const int64_t N = x.dim(0), Cin = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int64_t Cout = w.dim(1), K = w.dim(2);
  const int64_t OH = (IH - 1) * stride - 2 * pad + K + out_pad;
  const int64_t OW = (IW - 1) * stride - 2 * pad + K + out_pad;
  if (OH < 1 || OW < 1) throw std::invalid_argument("conv_transpose2d: empty output");
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != Cout) {
    throw std::invalid_argument("conv_transpose2d: bias size mismatch");
  }
  const int64_t ckk = Cout * K * K, ihw = IH * IW, xs = Cin * ihw, ys = Cout * OH * OW;

  std::vector<T> out(static_cast<size_t>(N * ys), T(0));
  const auto vt = detail::transpose2d(w.data().data(), Cin, ckk);  // [Cout*K*K, Cin]
  const T* bptr = has_bias ? bias.data().data() : nullptr;
  parallel_for(N, 1, [&](int64_t n0, int64_t n1) {
    auto& col = detail::conv_scratch<T>();
    if (col.size() < static_cast<size_t>(ckk * ihw)) col.resize(static_cast<size_t>(ckk * ihw));
    for (int64_t n = n0; n < n1; ++n) {
      detail::K<T>::gemm_nn(ckk, ihw, Cin, vt.data(), Cin, x.data().data() + n * xs, ihw,
                            col.data(), ihw, false);
      T* y = out.data() + n * ys;
      detail::col2im(col.data(), Cout, OH, OW, IH, IW, K, stride, pad, y);
      if (bptr) {
        for (int64_t c = 0; c < Cout; ++c) {
          const T b = bptr[c];
          T* row = y + c * OH * OW;
          for (int64_t i = 0; i < OH * OW; ++i) row[i] += b;
        }
      }
    }
  });

  std::vector<Tensor<T>> parents = {x, w};
  if (has_bias) parents.push_back(bias);
  return detail::make_op<T>(
      "conv_transpose2d", {N, Cout, OH, OW}, std::move(out), std::move(parents),
      [N, Cin, IH, IW, Cout, K, OH, OW, stride, pad, ckk, ihw, xs, ys, has_bias](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& pw = *nd.parents[1];
        if (px.needs_grad) {
          px.ensure_grad();
          parallel_for(N, 1, [&](int64_t n0, int64_t n1) {
            auto& icol = detail::conv_scratch<T>();
            if (icol.size() < static_cast<size_t>(ckk * ihw)) icol.resize(static_cast<size_t>(ckk * ihw));
            for (int64_t n = n0; n < n1; ++n) {
              detail::im2col(nd.grad.data() + n * ys, Cout, OH, OW, IH, IW, K, stride, pad, icol.data());
              detail::K<T>::gemm_nn(Cin, ihw, ckk, pw.val.data(), ckk, icol.data(), ihw,
                                    px.grad.data() + n * xs, ihw, true);
            }
          });
        }
        if (pw.needs_grad) {
          pw.ensure_grad();
          auto& icol = detail::conv_scratch<T>();
          if (icol.size() < static_cast<size_t>(ckk * ihw)) icol.resize(static_cast<size_t>(ckk * ihw));
          for (int64_t n = 0; n < N; ++n) {
            detail::im2col(nd.grad.data() + n * ys, Cout, OH, OW, IH, IW, K, stride, pad, icol.data());
            const T* xv = px.val.data() + n * xs;
            T* dw = pw.grad.data();
            parallel_for(Cin, 8, [&](int64_t r0, int64_t r1) {
              detail::K<T>::gemm_nt(r1 - r0, ckk, ihw, xv + r0 * ihw, ihw, icol.data(), ihw,
                                    dw + r0 * ckk, ckk, true);
            });
          }
        }
        if (has_bias && nd.parents[2]->needs_grad) {
          auto& pb = *nd.parents[2];
          pb.ensure_grad();
          for (int64_t n = 0; n < N; ++n) {
            for (int64_t c = 0; c < Cout; ++c) {
              pb.grad[c] += static_cast<T>(
                  detail::K<T>::reduce_sum(OH * OW, nd.grad.data() + n * ys + c * OH * OW));
            }
          }
        }
      });
}

// Average pooling, square window, no padding.
template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int64_t k, int64_t stride) {
  if (x.shape().size() != 4 || x.dim(2) < k || x.dim(3) < k) {
    throw std::invalid_argument("avg_pool2d: window " + std::to_string(k) + " too large for " +
                                shape_str(x.shape()));
  }
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OH = (H - k) / stride + 1, OW = (W - k) / stride + 1;
  std::vector<T> out(static_cast<size_t>(N * C * OH * OW));
  const T inv = T(1) / static_cast<T>(k * k);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T* p = x.data().data() + nc * H * W;
    T* o = out.data() + nc * OH * OW;
    for (int64_t oh = 0; oh < OH; ++oh) {
      for (int64_t ow = 0; ow < OW; ++ow) {
        T s = T(0);
        for (int64_t i = 0; i < k; ++i)
          for (int64_t j = 0; j < k; ++j) s += p[(oh * stride + i) * W + ow * stride + j];
        o[oh * OW + ow] = s * inv;
      }
    }
  }
  return detail::make_op<T>("avg_pool2d", {N, C, OH, OW}, std::move(out), {x},
                            [N, C, H, W, OH, OW, k, stride, inv](Node<T>& nd) {
                              auto& px = *nd.parents[0];
                              px.ensure_grad();
                              for (int64_t nc = 0; nc < N * C; ++nc) {
                                const T* g = nd.grad.data() + nc * OH * OW;
                                T* dx = px.grad.data() + nc * H * W;
                                for (int64_t oh = 0; oh < OH; ++oh) {
                                  for (int64_t ow = 0; ow < OW; ++ow) {
                                    const T gv = g[oh * OW + ow] * inv;
                                    for (int64_t i = 0; i < k; ++i)
                                      for (int64_t j = 0; j < k; ++j)
                                        dx[(oh * stride + i) * W + ow * stride + j] += gv;
                                  }
                                }
                              }
                            });
}

}  // namespace lgan
