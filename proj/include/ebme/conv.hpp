#pragma once

#include <Eigen/Core>

#include "ebme/autograd.hpp"

namespace ebme {

// 2D convolution over NHWC tensors via im2col + GEMM.
// Weight layout: (kh, kw, cin, cout) packed in the Tensor dims (n,h,w,c),
// which makes the flat weight buffer a row-major (kh*kw*cin) x cout matrix.
// Bias is a (1,1,1,cout) tensor. Zero padding.

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
inline void im2col(const Tensor<T>& x, int sample, int kh, int kw, int stride,
                   int pad, int ho, int wo, MatRM<T>& col) {
  const int h = x.h, w = x.w, c = x.c;
  col.setZero(static_cast<Eigen::Index>(ho) * wo, static_cast<Eigen::Index>(kh) * kw * c);
  const T* base = x.data.data() + static_cast<Eigen::Index>(sample) * h * w * c;
  for (int oy = 0; oy < ho; ++oy) {
    for (int ky = 0; ky < kh; ++ky) {
      const int iy = oy * stride - pad + ky;
      if (iy < 0 || iy >= h) continue;
      for (int ox = 0; ox < wo; ++ox) {
        T* dst = col.data() + (static_cast<Eigen::Index>(oy) * wo + ox) * col.cols() +
                 static_cast<Eigen::Index>(ky) * kw * c;
        const int ix0 = ox * stride - pad;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ix0 + kx;
          if (ix < 0 || ix >= w) continue;
          const T* src = base + (static_cast<Eigen::Index>(iy) * w + ix) * c;
          std::copy(src, src + c, dst + static_cast<Eigen::Index>(kx) * c);
        }
      }
    }
  }
}

template <typename T>
inline void col2im_add(const MatRM<T>& col, Tensor<T>& dx, int sample, int kh,
                       int kw, int stride, int pad, int ho, int wo) {
  const int h = dx.h, w = dx.w, c = dx.c;
  T* base = dx.data.data() + static_cast<Eigen::Index>(sample) * h * w * c;
  for (int oy = 0; oy < ho; ++oy) {
    for (int ky = 0; ky < kh; ++ky) {
      const int iy = oy * stride - pad + ky;
      if (iy < 0 || iy >= h) continue;
      for (int ox = 0; ox < wo; ++ox) {
        const T* src = col.data() + (static_cast<Eigen::Index>(oy) * wo + ox) * col.cols() +
                       static_cast<Eigen::Index>(ky) * kw * c;
        const int ix0 = ox * stride - pad;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ix0 + kx;
          if (ix < 0 || ix >= w) continue;
          T* dst = base + (static_cast<Eigen::Index>(iy) * w + ix) * c;
          const T* s = src + static_cast<Eigen::Index>(kx) * c;
          for (int ci = 0; ci < c; ++ci) dst[ci] += s[ci];
        }
      }
    }
  }
}

template <typename T>
inline Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
                     int stride = 1, int pad = 1) {
  const Tensor<T>& xv = x->value;
  const Tensor<T>& wv = weight->value;
  const int kh = wv.n, kw = wv.h, cin = wv.w, cout = wv.c;
  if (cin != xv.c) {
    throw DimensionError("conv2d: input channels " + std::to_string(xv.c) +
                         " != weight cin " + std::to_string(cin));
  }
  if (bias->value.size() != cout) throw DimensionError("conv2d: bias size mismatch");
  const int ho = (xv.h + 2 * pad - kh) / stride + 1;
  const int wo = (xv.w + 2 * pad - kw) / stride + 1;
  if (ho < 1 || wo < 1) throw DimensionError("conv2d: output would be empty");

  Tensor<T> out(xv.n, ho, wo, cout);
  const Eigen::Index P = static_cast<Eigen::Index>(ho) * wo;
  const Eigen::Index K = static_cast<Eigen::Index>(kh) * kw * cin;
  Eigen::Map<const MatRM<T>> W(wv.data.data(), K, cout);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(bias->value.data.data(), cout);

  parallel_for(xv.n, [&](int s) {
    MatRM<T> col;
    im2col(xv, s, kh, kw, stride, pad, ho, wo, col);
    Eigen::Map<MatRM<T>> Y(out.data.data() + s * P * cout, P, cout);
    Y.noalias() = col * W;
    Y.rowwise() += B;
  });

  Node<T>*xp = x.get(), *wp = weight.get(), *bp = bias.get();
  auto node = make_node<T>(std::move(out), {x, weight, bias}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, wp, bp, kh, kw, stride, pad, ho, wo, P, K, cout] {
      const Tensor<T>& xv = xp->value;
      Eigen::Map<const MatRM<T>> W(wp->value.data.data(), K, cout);
      if (wp->requires_grad) wp->ensure_grad();
      if (bp->requires_grad) bp->ensure_grad();
      if (xp->requires_grad) xp->ensure_grad();
      MatRM<T> col, dcol;
      for (int s = 0; s < xv.n; ++s) {
        Eigen::Map<const MatRM<T>> dY(self->grad.data.data() + s * P * cout, P, cout);
        if (wp->requires_grad || bp->requires_grad) {
          im2col(xv, s, kh, kw, stride, pad, ho, wo, col);
          if (wp->requires_grad) {
            Eigen::Map<MatRM<T>> dW(wp->grad.data.data(), K, cout);
            dW.noalias() += col.transpose() * dY;
          }
          if (bp->requires_grad) {
            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dB(bp->grad.data.data(), cout);
            dB += dY.colwise().sum();
          }
        }
        if (xp->requires_grad) {
          dcol.noalias() = dY * W.transpose();
          col2im_add(dcol, xp->grad, s, kh, kw, stride, pad, ho, wo);
        }
      }
    };
  }
  return node;
}

}  // namespace ebme
