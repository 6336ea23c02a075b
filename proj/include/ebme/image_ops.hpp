#pragma once

#include <cmath>

#include "ebme/autograd.hpp"

namespace ebme {

namespace detail {

struct LerpIndex {
  int i0, i1;
  double w1;  // weight of i1; weight of i0 is 1 - w1
};

// Half-pixel-center sampling positions, clamped to the valid range.
inline std::vector<LerpIndex> resize_axis(int in, int out) {
  std::vector<LerpIndex> idx(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    if (src > in - 1) src = in - 1;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 > in - 2) i0 = in - 2;
    if (i0 < 0) i0 = 0;
    const int i1 = (in == 1) ? 0 : i0 + 1;
    idx[o] = {i0, i1, (in == 1) ? 0.0 : src - i0};
  }
  return idx;
}

}  // namespace detail

template <typename T>
inline Tensor<T> resize_bilinear(const Tensor<T>& x, int oh, int ow) {
  if (oh < 1 || ow < 1) throw RangeError("resize_bilinear: target size must be >= 1");
  if (x.h == oh && x.w == ow) return x;
  const auto ys = detail::resize_axis(x.h, oh);
  const auto xs = detail::resize_axis(x.w, ow);
  Tensor<T> out(x.n, oh, ow, x.c);
  for (int s = 0; s < x.n; ++s) {
    for (int oy = 0; oy < oh; ++oy) {
      const auto& ly = ys[oy];
      for (int ox = 0; ox < ow; ++ox) {
        const auto& lx = xs[ox];
        for (int ci = 0; ci < x.c; ++ci) {
          const double v00 = x(s, ly.i0, lx.i0, ci), v01 = x(s, ly.i0, lx.i1, ci);
          const double v10 = x(s, ly.i1, lx.i0, ci), v11 = x(s, ly.i1, lx.i1, ci);
          const double top = v00 + (v01 - v00) * lx.w1;
          const double bot = v10 + (v11 - v10) * lx.w1;
          out(s, oy, ox, ci) = static_cast<T>(top + (bot - top) * ly.w1);
        }
      }
    }
  }
  return out;
}

template <typename T>
inline Var<T> resize_bilinear(const Var<T>& x, int oh, int ow) {
  if (oh < 1 || ow < 1) throw RangeError("resize_bilinear: target size must be >= 1");
  if (x->value.h == oh && x->value.w == ow) return x;
  Tensor<T> out = resize_bilinear(x->value, oh, ow);
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, oh, ow] {
      xp->ensure_grad();
      const auto ys = detail::resize_axis(xp->value.h, oh);
      const auto xs = detail::resize_axis(xp->value.w, ow);
      const int c = xp->value.c;
      for (int s = 0; s < xp->value.n; ++s) {
        for (int oy = 0; oy < oh; ++oy) {
          const auto& ly = ys[oy];
          for (int ox = 0; ox < ow; ++ox) {
            const auto& lx = xs[ox];
            const T w00 = static_cast<T>((1 - ly.w1) * (1 - lx.w1));
            const T w01 = static_cast<T>((1 - ly.w1) * lx.w1);
            const T w10 = static_cast<T>(ly.w1 * (1 - lx.w1));
            const T w11 = static_cast<T>(ly.w1 * lx.w1);
            for (int ci = 0; ci < c; ++ci) {
              const T g = self->grad(s, oy, ox, ci);
              xp->grad(s, ly.i0, lx.i0, ci) += g * w00;
              xp->grad(s, ly.i0, lx.i1, ci) += g * w01;
              xp->grad(s, ly.i1, lx.i0, ci) += g * w10;
              xp->grad(s, ly.i1, lx.i1, ci) += g * w11;
            }
          }
        }
      }
    };
  }
  return node;
}

template <typename T>
inline Tensor<T> pad_replicate(const Tensor<T>& x, int top, int bottom, int left, int right) {
  if (top < 0 || bottom < 0 || left < 0 || right < 0) {
    throw RangeError("pad_replicate: negative padding");
  }
  if (top == 0 && bottom == 0 && left == 0 && right == 0) return x;
  Tensor<T> out(x.n, x.h + top + bottom, x.w + left + right, x.c);
  for (int s = 0; s < x.n; ++s) {
    for (int oy = 0; oy < out.h; ++oy) {
      const int iy = std::min(std::max(oy - top, 0), x.h - 1);
      for (int ox = 0; ox < out.w; ++ox) {
        const int ix = std::min(std::max(ox - left, 0), x.w - 1);
        for (int ci = 0; ci < x.c; ++ci) out(s, oy, ox, ci) = x(s, iy, ix, ci);
      }
    }
  }
  return out;
}

template <typename T>
inline Var<T> pad_replicate(const Var<T>& x, int top, int bottom, int left, int right) {
  if (top == 0 && bottom == 0 && left == 0 && right == 0) return x;
  Tensor<T> out = pad_replicate(x->value, top, bottom, left, right);
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, top, left] {
      xp->ensure_grad();
      const Tensor<T>& g = self->grad;
      const int h = xp->value.h, w = xp->value.w, c = xp->value.c;
      for (int s = 0; s < g.n; ++s) {
        for (int oy = 0; oy < g.h; ++oy) {
          const int iy = std::min(std::max(oy - top, 0), h - 1);
          for (int ox = 0; ox < g.w; ++ox) {
            const int ix = std::min(std::max(ox - left, 0), w - 1);
            for (int ci = 0; ci < c; ++ci) xp->grad(s, iy, ix, ci) += g(s, oy, ox, ci);
          }
        }
      }
    };
  }
  return node;
}

template <typename T>
inline Tensor<T> crop(const Tensor<T>& x, int top, int left, int oh, int ow) {
  if (top < 0 || left < 0 || top + oh > x.h || left + ow > x.w) {
    throw RangeError("crop: window out of bounds");
  }
  if (top == 0 && left == 0 && oh == x.h && ow == x.w) return x;
  Tensor<T> out(x.n, oh, ow, x.c);
  for (int s = 0; s < x.n; ++s) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ci = 0; ci < x.c; ++ci) out(s, oy, ox, ci) = x(s, top + oy, left + ox, ci);
      }
    }
  }
  return out;
}

template <typename T>
inline Var<T> crop(const Var<T>& x, int top, int left, int oh, int ow) {
  if (top == 0 && left == 0 && oh == x->value.h && ow == x->value.w) return x;
  Tensor<T> out = crop(x->value, top, left, oh, ow);
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, top, left, oh, ow] {
      xp->ensure_grad();
      for (int s = 0; s < self->grad.n; ++s) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            for (int ci = 0; ci < self->grad.c; ++ci) {
              xp->grad(s, top + oy, left + ox, ci) += self->grad(s, oy, ox, ci);
            }
          }
        }
      }
    };
  }
  return node;
}

}  // namespace ebme
