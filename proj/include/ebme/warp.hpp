#pragma once

#include <cmath>

#include "ebme/autograd.hpp"
#include "ebme/image_ops.hpp"

namespace ebme {

// Flow fields are (n,h,w,2) tensors: channel 0 horizontal (+right),
// channel 1 vertical (+down), in pixels.

template <typename T>
struct BiMotion {
  Tensor<T> f01;  // motion from frame 0 to frame 1
  Tensor<T> f10;  // motion from frame 1 to frame 0
};

template <typename T>
struct SplatResult {
  Tensor<T> warped;
  Tensor<T> weight;  // accumulated splat weight, (n,h,w,1)
};

// Guard for the average-splat division; gradient flows through max(den, eps).
template <typename T>
inline constexpr T splat_eps() { return T(1e-8); }

namespace detail {

template <typename T>
inline void check_flow(const Tensor<T>& src, const Tensor<T>& flow, const char* what) {
  if (flow.c != 2) throw DimensionError(std::string(what) + ": flow must have 2 channels");
  if (flow.n != src.n || flow.h != src.h || flow.w != src.w) {
    throw DimensionError(std::string(what) + ": flow shape " + flow.shape_str() +
                         " does not match image " + src.shape_str());
  }
}

// Accumulates bilinearly-split contributions of every source pixel.
template <typename T>
inline void splat_accumulate(const Tensor<T>& src, const Tensor<T>& flow,
                             int s, Tensor<T>& num, Tensor<T>& den) {
  const int h = src.h, w = src.w, c = src.c;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T tx = x + flow(s, y, x, 0);
      const T ty = y + flow(s, y, x, 1);
      const int x0 = static_cast<int>(std::floor(tx));
      const int y0 = static_cast<int>(std::floor(ty));
      const T fx = tx - x0, fy = ty - y0;
      const T wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (xs[k] < 0 || xs[k] >= w || ys[k] < 0 || ys[k] >= h) continue;
        den(s, ys[k], xs[k], 0) += wts[k];
        for (int ci = 0; ci < c; ++ci) {
          num(s, ys[k], xs[k], ci) += wts[k] * src(s, y, x, ci);
        }
      }
    }
  }
}

}  // namespace detail

// Average splatting: each source pixel scatters its value (unit weight,
// bilinearly split) to the four integer targets around p + flow(p); targets
// divide by accumulated weight. Zero-weight targets stay 0 (holes).
template <typename T>
inline SplatResult<T> forward_warp_average(const Tensor<T>& src, const Tensor<T>& flow) {
  detail::check_flow(src, flow, "forward_warp_average");
  Tensor<T> num(src.n, src.h, src.w, src.c);
  Tensor<T> den(src.n, src.h, src.w, 1);
  parallel_for(src.n, [&](int s) { detail::splat_accumulate(src, flow, s, num, den); });
  SplatResult<T> out;
  out.weight = den;
  out.warped = std::move(num);
  const Eigen::Index pixels = static_cast<Eigen::Index>(src.n) * src.h * src.w;
  for (Eigen::Index p = 0; p < pixels; ++p) {
    const T d = std::max(den.data[p], splat_eps<T>());
    out.warped.data.segment(p * src.c, src.c) /= d;
  }
  return out;
}

// Autograd version; returns the warped image only (the weight map is not
// consumed by any learned component).
template <typename T>
inline Var<T> forward_warp_average(const Var<T>& src, const Var<T>& flow) {
  detail::check_flow(src->value, flow->value, "forward_warp_average");
  const Tensor<T>& sv = src->value;
  Tensor<T> num(sv.n, sv.h, sv.w, sv.c);
  auto den = std::make_shared<Tensor<T>>(sv.n, sv.h, sv.w, 1);
  parallel_for(sv.n, [&](int s) { detail::splat_accumulate(sv, flow->value, s, num, *den); });
  auto numv = std::make_shared<Tensor<T>>(num);
  Tensor<T> out = std::move(num);
  const Eigen::Index pixels = static_cast<Eigen::Index>(sv.n) * sv.h * sv.w;
  for (Eigen::Index p = 0; p < pixels; ++p) {
    out.data.segment(p * sv.c, sv.c) /= std::max(den->data[p], splat_eps<T>());
  }
  Node<T>*sp = src.get(), *fp = flow.get();
  auto node = make_node<T>(std::move(out), {src, flow}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, sp, fp, den, numv] {
      const Tensor<T>& sv = sp->value;
      const Tensor<T>& fv = fp->value;
      const int h = sv.h, w = sv.w, c = sv.c;
      // Per-target gradients of the guarded division out = num / max(den,eps).
      Tensor<T> dnum(sv.n, h, w, c), dden(sv.n, h, w, 1);
      const Eigen::Index pixels = static_cast<Eigen::Index>(sv.n) * h * w;
      for (Eigen::Index p = 0; p < pixels; ++p) {
        const T d = std::max(den->data[p], splat_eps<T>());
        auto g = self->grad.data.segment(p * c, c);
        dnum.data.segment(p * c, c) = g / d;
        if (den->data[p] >= splat_eps<T>()) {
          dden.data[p] = -(g * numv->data.segment(p * c, c)).sum() / (d * d);
        }
      }
      if (sp->requires_grad) sp->ensure_grad();
      if (fp->requires_grad) fp->ensure_grad();
      for (int s = 0; s < sv.n; ++s) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const T tx = x + fv(s, y, x, 0);
            const T ty = y + fv(s, y, x, 1);
            const int x0 = static_cast<int>(std::floor(tx));
            const int y0 = static_cast<int>(std::floor(ty));
            const T fx = tx - x0, fy = ty - y0;
            const T wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const T dwdx[4] = {-(1 - fy), (1 - fy), -fy, fy};
            const T dwdy[4] = {-(1 - fx), -fx, (1 - fx), fx};
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            T gu = 0, gv = 0;
            for (int k = 0; k < 4; ++k) {
              if (xs[k] < 0 || xs[k] >= w || ys[k] < 0 || ys[k] >= h) continue;
              T dot = dden(s, ys[k], xs[k], 0);
              for (int ci = 0; ci < c; ++ci) {
                const T dn = dnum(s, ys[k], xs[k], ci);
                if (sp->requires_grad) sp->grad(s, y, x, ci) += wts[k] * dn;
                dot += dn * sv(s, y, x, ci);
              }
              gu += dwdx[k] * dot;
              gv += dwdy[k] * dot;
            }
            if (fp->requires_grad) {
              fp->grad(s, y, x, 0) += gu;
              fp->grad(s, y, x, 1) += gv;
            }
          }
        }
      }
    };
  }
  return node;
}

namespace detail {

// Bilinear gather with border clamp. Positions outside the frame are clamped
// onto the border; the flow gradient is zeroed there (the clamp is flat).
template <typename T>
struct GatherSample {
  int x0, x1, y0, y1;
  T fx, fy;
  bool inx, iny;  // whether the unclamped position was inside along each axis
};

template <typename T>
inline GatherSample<T> gather_at(T sx, T sy, int h, int w) {
  GatherSample<T> g;
  g.inx = (sx >= 0 && sx <= w - 1);
  g.iny = (sy >= 0 && sy <= h - 1);
  sx = std::min(std::max(sx, T(0)), T(w - 1));
  sy = std::min(std::max(sy, T(0)), T(h - 1));
  g.x0 = std::min(static_cast<int>(std::floor(sx)), w - 2 >= 0 ? w - 2 : 0);
  g.y0 = std::min(static_cast<int>(std::floor(sy)), h - 2 >= 0 ? h - 2 : 0);
  if (g.x0 < 0) g.x0 = 0;
  if (g.y0 < 0) g.y0 = 0;
  g.x1 = std::min(g.x0 + 1, w - 1);
  g.y1 = std::min(g.y0 + 1, h - 1);
  g.fx = sx - g.x0;
  g.fy = sy - g.y0;
  return g;
}

}  // namespace detail

template <typename T>
inline Tensor<T> backward_warp(const Tensor<T>& src, const Tensor<T>& flow) {
  detail::check_flow(src, flow, "backward_warp");
  Tensor<T> out(src.n, src.h, src.w, src.c);
  parallel_for(src.n, [&](int s) {
    for (int y = 0; y < src.h; ++y) {
      for (int x = 0; x < src.w; ++x) {
        const auto g = detail::gather_at<T>(x + flow(s, y, x, 0), y + flow(s, y, x, 1),
                                            src.h, src.w);
        for (int ci = 0; ci < src.c; ++ci) {
          const T top = src(s, g.y0, g.x0, ci) +
                        (src(s, g.y0, g.x1, ci) - src(s, g.y0, g.x0, ci)) * g.fx;
          const T bot = src(s, g.y1, g.x0, ci) +
                        (src(s, g.y1, g.x1, ci) - src(s, g.y1, g.x0, ci)) * g.fx;
          out(s, y, x, ci) = top + (bot - top) * g.fy;
        }
      }
    }
  });
  return out;
}

template <typename T>
inline Var<T> backward_warp(const Var<T>& src, const Var<T>& flow) {
  Tensor<T> out = backward_warp(src->value, flow->value);
  Node<T>*sp = src.get(), *fp = flow.get();
  auto node = make_node<T>(std::move(out), {src, flow}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, sp, fp] {
      const Tensor<T>& sv = sp->value;
      const Tensor<T>& fv = fp->value;
      if (sp->requires_grad) sp->ensure_grad();
      if (fp->requires_grad) fp->ensure_grad();
      for (int s = 0; s < sv.n; ++s) {
        for (int y = 0; y < sv.h; ++y) {
          for (int x = 0; x < sv.w; ++x) {
            const auto g = detail::gather_at<T>(x + fv(s, y, x, 0), y + fv(s, y, x, 1),
                                                sv.h, sv.w);
            T gu = 0, gv = 0;
            for (int ci = 0; ci < sv.c; ++ci) {
              const T go = self->grad(s, y, x, ci);
              const T v00 = sv(s, g.y0, g.x0, ci), v01 = sv(s, g.y0, g.x1, ci);
              const T v10 = sv(s, g.y1, g.x0, ci), v11 = sv(s, g.y1, g.x1, ci);
              if (sp->requires_grad) {
                sp->grad(s, g.y0, g.x0, ci) += go * (1 - g.fx) * (1 - g.fy);
                sp->grad(s, g.y0, g.x1, ci) += go * g.fx * (1 - g.fy);
                sp->grad(s, g.y1, g.x0, ci) += go * (1 - g.fx) * g.fy;
                sp->grad(s, g.y1, g.x1, ci) += go * g.fx * g.fy;
              }
              gu += go * ((v01 - v00) * (1 - g.fy) + (v11 - v10) * g.fy);
              gv += go * ((v10 - v00) * (1 - g.fx) + (v11 - v01) * g.fx);
            }
            if (fp->requires_grad) {
              if (g.inx) fp->grad(s, y, x, 0) += gu;
              if (g.iny) fp->grad(s, y, x, 1) += gv;
            }
          }
        }
      }
    };
  }
  return node;
}

// F_{0->t} = t * F_{0->1},  F_{1->t} = (1-t) * F_{1->0}.
template <typename T>
inline std::pair<Tensor<T>, Tensor<T>> scale_flow_to_time(const BiMotion<T>& bm, T t) {
  if (!(t > T(0) && t < T(1))) throw RangeError("scale_flow_to_time: t must be in (0,1)");
  require_same_shape(bm.f01, bm.f10, "scale_flow_to_time");
  Tensor<T> f0t = bm.f01, f1t = bm.f10;
  f0t.data *= t;
  f1t.data *= (T(1) - t);
  return {std::move(f0t), std::move(f1t)};
}

// Bilinear spatial resize of a flow field combined with value rescaling so
// displacements stay in pixel units of the new resolution. Per-axis factors
// are applied (identical for uniform scaling).
template <typename T>
inline Tensor<T> resize_flow_to(const Tensor<T>& flow, int oh, int ow) {
  if (flow.c != 2 && flow.c != 4) throw DimensionError("resize_flow_to: expected 2 or 4 channels");
  Tensor<T> out = resize_bilinear(flow, oh, ow);
  const T su = static_cast<T>(ow) / flow.w;
  const T sv = static_cast<T>(oh) / flow.h;
  for (Eigen::Index i = 0; i < out.size(); i += 2) {
    out.data[i] *= su;
    out.data[i + 1] *= sv;
  }
  return out;
}

template <typename T>
inline Tensor<T> resize_flow(const Tensor<T>& flow, T scale) {
  if (!(scale > T(0))) throw RangeError("resize_flow: scale must be positive");
  const int oh = static_cast<int>(std::lround(flow.h * static_cast<double>(scale)));
  const int ow = static_cast<int>(std::lround(flow.w * static_cast<double>(scale)));
  if (oh < 1 || ow < 1) throw RangeError("resize_flow: scaled size below 1");
  return resize_flow_to(flow, oh, ow);
}

template <typename T>
inline Var<T> resize_flow_to(const Var<T>& flow, int oh, int ow) {
  const int c = flow->value.c;
  if (c != 2 && c != 4) throw DimensionError("resize_flow_to: expected 2 or 4 channels");
  const T su = static_cast<T>(ow) / flow->value.w;
  const T sv = static_cast<T>(oh) / flow->value.h;
  Var<T> r = resize_bilinear(flow, oh, ow);
  if (su == T(1) && sv == T(1)) return r;
  std::vector<T> factors(c);
  for (int i = 0; i < c; ++i) factors[i] = (i % 2 == 0) ? su : sv;
  return scale_channels(r, std::move(factors));
}

}  // namespace ebme
