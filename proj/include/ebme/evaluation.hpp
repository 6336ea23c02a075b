#pragma once

#include <limits>

#include "ebme/model.hpp"

namespace ebme {

template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same_shape(pred, gt, "psnr");
  double mse = (pred.data.template cast<double>() - gt.data.template cast<double>())
                   .square()
                   .mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline const std::vector<double>& gauss11() {
  static const std::vector<double> k = [] {
    std::vector<double> v(11);
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
      double d = i - 5;
      v[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += v[i];
    }
    for (auto& x : v) x /= sum;
    return v;
  }();
  return k;
}

// Separable valid-mode Gaussian blur over one channel plane.
inline Eigen::ArrayXXd blur11(const Eigen::ArrayXXd& img) {
  const auto& k = gauss11();
  const Eigen::Index h = img.rows(), w = img.cols();
  Eigen::ArrayXXd tmp(h, w - 10), out(h - 10, w - 10);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x + 10 < w; ++x) {
      double s = 0;
      for (int i = 0; i < 11; ++i) s += k[i] * img(y, x + i);
      tmp(y, x) = s;
    }
  for (Eigen::Index y = 0; y + 10 < h; ++y)
    for (Eigen::Index x = 0; x < tmp.cols(); ++x) {
      double s = 0;
      for (int i = 0; i < 11; ++i) s += k[i] * tmp(y + i, x);
      out(y, x) = s;
    }
  return out;
}

}  // namespace detail

// Windowed SSIM: 11x11 Gaussian (sigma 1.5), unit data range, averaged over
// all valid windows and channels.
template <typename T>
double ssim(const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same_shape(pred, gt, "ssim");
  if (pred.h < 11 || pred.w < 11) throw DimensionError("ssim: image smaller than window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  long count = 0;
  for (int n = 0; n < pred.n; ++n)
    for (int c = 0; c < pred.c; ++c) {
      Eigen::ArrayXXd a(pred.h, pred.w), b(pred.h, pred.w);
      for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
          a(y, x) = pred(n, y, x, c);
          b(y, x) = gt(n, y, x, c);
        }
      Eigen::ArrayXXd mu_a = detail::blur11(a), mu_b = detail::blur11(b);
      Eigen::ArrayXXd s_aa = detail::blur11(a * a) - mu_a * mu_a;
      Eigen::ArrayXXd s_bb = detail::blur11(b * b) - mu_b * mu_b;
      Eigen::ArrayXXd s_ab = detail::blur11(a * b) - mu_a * mu_b;
      Eigen::ArrayXXd num = (2 * mu_a * mu_b + c1) * (2 * s_ab + c2);
      Eigen::ArrayXXd den = (mu_a * mu_a + mu_b * mu_b + c1) * (s_aa + s_bb + c2);
      total += (num / den).sum();
      count += num.size();
    }
  return total / static_cast<double>(count);
}

// Mean endpoint error; mask (n,h,w,1) restricts the average when given.
template <typename T>
double epe(const Tensor<T>& flow, const Tensor<T>& gt, const Tensor<T>* mask = nullptr) {
  require_same_shape(flow, gt, "epe");
  if (flow.c != 2) throw DimensionError("epe: flow must have 2 channels");
  if (mask && (mask->n != flow.n || mask->h != flow.h || mask->w != flow.w || mask->c != 1)) {
    throw DimensionError("epe: mask shape mismatch");
  }
  double total = 0, weight = 0;
  for (int n = 0; n < flow.n; ++n)
    for (int y = 0; y < flow.h; ++y)
      for (int x = 0; x < flow.w; ++x) {
        double du = flow(n, y, x, 0) - gt(n, y, x, 0);
        double dv = flow(n, y, x, 1) - gt(n, y, x, 1);
        double m = mask ? (*mask)(n, y, x, 0) : 1.0;
        total += m * std::sqrt(du * du + dv * dv);
        weight += m;
      }
  if (weight == 0) throw RangeError("epe: empty mask");
  return total / weight;
}

namespace detail {

template <typename T>
Tensor<T> flip_hv_image(const Tensor<T>& t) {
  Tensor<T> out(t.n, t.h, t.w, t.c);
  for (int n = 0; n < t.n; ++n)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        for (int c = 0; c < t.c; ++c)
          out(n, y, x, c) = t(n, t.h - 1 - y, t.w - 1 - x, c);
  return out;
}

}  // namespace detail

// EBME-H*: average the plain prediction with one from horizontally and
// vertically flipped inputs (output unflipped). Exactly two forward passes.
template <typename T>
Tensor<T> interpolate_tta(const EbmeModel<T>& model, const Tensor<T>& i0,
                          const Tensor<T>& i1, T t, int levels, bool highres) {
  Tensor<T> plain = model.interpolate(i0, i1, t, levels, highres);
  Tensor<T> flipped = model.interpolate(detail::flip_hv_image(i0),
                                        detail::flip_hv_image(i1), t, levels, highres);
  Tensor<T> out = plain;
  out.data = T(0.5) * (plain.data + detail::flip_hv_image(flipped).data);
  return out;
}

// k-x interpolation reusing one motion estimate for all k-1 timestamps.
template <typename T>
std::vector<Tensor<T>> interpolate_multi(const EbmeModel<T>& model, const Tensor<T>& i0,
                                         const Tensor<T>& i1, int k, int levels,
                                         bool highres) {
  if (k < 2) throw RangeError("interpolate_multi: k must be >= 2");
  auto motion = EbmeModel<T>::motion_var(model.estimator.estimate(i0, i1, levels));
  std::vector<Tensor<T>> frames;
  frames.reserve(k - 1);
  for (int j = 1; j < k; ++j) {
    T t = static_cast<T>(j) / static_cast<T>(k);
    auto v = highres ? model.synthesize_highres_var(i0, i1, motion, t)
                     : model.synthesize_base_var(i0, i1, motion, t);
    frames.push_back(EbmeModel<T>::clamp01(v.frame->value));
  }
  return frames;
}

}  // namespace ebme
