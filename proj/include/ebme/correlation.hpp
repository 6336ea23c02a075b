#pragma once

#include "ebme/autograd.hpp"

namespace ebme {

// Partial correlation volume between two feature maps:
//   corr(p, d) = <featA(p), featB(p + d)> / C,  |d|_inf <= radius.
// Displacement channels are ordered row-major from (-r,-r) to (r,r).
// Positions p + d outside the map contribute 0.
template <typename T>
inline Tensor<T> local_correlation(const Tensor<T>& fa, const Tensor<T>& fb, int radius) {
  require_same_shape(fa, fb, "local_correlation");
  if (radius < 0) throw RangeError("local_correlation: radius must be >= 0");
  const int side = 2 * radius + 1;
  const int h = fa.h, w = fa.w, c = fa.c;
  const T inv_c = T(1) / static_cast<T>(c);
  Tensor<T> out(fa.n, h, w, side * side);
  parallel_for(fa.n, [&](int s) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        auto a = fa.data.segment(fa.index(s, y, x, 0), c);
        int d = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dx = -radius; dx <= radius; ++dx, ++d) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            out(s, y, x, d) = (a * fb.data.segment(fb.index(s, yy, xx, 0), c)).sum() * inv_c;
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
inline Var<T> local_correlation(const Var<T>& fa, const Var<T>& fb, int radius) {
  Tensor<T> out = local_correlation(fa->value, fb->value, radius);
  Node<T>*ap = fa.get(), *bp = fb.get();
  auto node = make_node<T>(std::move(out), {fa, fb}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, ap, bp, radius] {
      const Tensor<T>& av = ap->value;
      const Tensor<T>& bv = bp->value;
      const int h = av.h, w = av.w, c = av.c;
      const T inv_c = T(1) / static_cast<T>(c);
      if (ap->requires_grad) ap->ensure_grad();
      if (bp->requires_grad) bp->ensure_grad();
      for (int s = 0; s < av.n; ++s) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            int d = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
              for (int dx = -radius; dx <= radius; ++dx, ++d) {
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                const T g = self->grad(s, y, x, d) * inv_c;
                if (g == T(0)) continue;
                if (ap->requires_grad) {
                  ap->grad.data.segment(av.index(s, y, x, 0), c) +=
                      g * bv.data.segment(bv.index(s, yy, xx, 0), c);
                }
                if (bp->requires_grad) {
                  bp->grad.data.segment(bv.index(s, yy, xx, 0), c) +=
                      g * av.data.segment(av.index(s, y, x, 0), c);
                }
              }
            }
          }
        }
      }
    };
  }
  return node;
}

}  // namespace ebme
