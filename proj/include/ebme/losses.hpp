#pragma once

#include "ebme/autograd.hpp"

namespace ebme {

struct LossConfig {
  double alpha = 0.5;
  double epsilon = 1e-6;
  double lambda_census = 0.1;
  int census_patch = 7;
  // Soft-sign scale of the ternary census transform and the soft Hamming
  // saturation constant, both on [0,1] grayscale.
  double census_thresh = 0.1;
};

// Mean Charbonnier penalty: mean((d^2 + eps^2)^alpha), d = gt - pred.
template <typename T>
inline Var<T> charbonnier(const Var<T>& pred, const Var<T>& gt, const LossConfig& cfg = {}) {
  require_same_shape(pred->value, gt->value, "charbonnier");
  auto d = sub(gt, pred);
  auto r = pow_positive(add_const(square(d), static_cast<T>(cfg.epsilon * cfg.epsilon)),
                        static_cast<T>(cfg.alpha));
  return mean_all(r);
}

namespace detail {

template <typename T>
inline T luma_weight(int ci, int c) {
  if (c == 3) {
    constexpr double w[3] = {0.299, 0.587, 0.114};
    return static_cast<T>(w[ci]);
  }
  return T(1) / static_cast<T>(c);
}

template <typename T>
inline Tensor<T> to_gray(const Tensor<T>& img) {
  Tensor<T> g(img.n, img.h, img.w, 1);
  for (int s = 0; s < img.n; ++s)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        T v = 0;
        for (int ci = 0; ci < img.c; ++ci) v += luma_weight<T>(ci, img.c) * img(s, y, x, ci);
        g(s, y, x, 0) = v;
      }
  return g;
}

}  // namespace detail

// Census loss: soft ternary census transform over a square patch of the
// grayscale images, soft Hamming distance between the transforms, then a
// Charbonnier penalty averaged over valid (full-patch) pixels. Differences
// are taken against the patch center, so the loss is exactly invariant to
// additive brightness offsets.
template <typename T>
inline Var<T> census_loss(const Var<T>& pred, const Var<T>& gt, const LossConfig& cfg = {}) {
  require_same_shape(pred->value, gt->value, "census_loss");
  const int r = cfg.census_patch / 2;
  const int h = pred->value.h, w = pred->value.w, n = pred->value.n;
  if (h < cfg.census_patch || w < cfg.census_patch) {
    return leaf(Tensor<T>::scalar(T(0)));
  }
  const T tau = static_cast<T>(cfg.census_thresh);
  const T c0 = static_cast<T>(cfg.census_thresh);
  const T eps2 = static_cast<T>(cfg.epsilon * cfg.epsilon);
  const T alpha = static_cast<T>(cfg.alpha);

  auto ga = std::make_shared<Tensor<T>>(detail::to_gray(pred->value));
  auto gb = std::make_shared<Tensor<T>>(detail::to_gray(gt->value));
  const long valid = static_cast<long>(n) * (h - 2 * r) * (w - 2 * r);
  const T inv_valid = T(1) / static_cast<T>(valid);

  auto soft_sign = [tau](T d) { return d / std::sqrt(d * d + tau * tau); };
  auto hamming_dist = [c0](T e) { return e * e / (e * e + c0); };

  T total = 0;
  for (int s = 0; s < n; ++s) {
    for (int y = r; y < h - r; ++y) {
      for (int x = r; x < w - r; ++x) {
        T hd = 0;
        const T ca = (*ga)(s, y, x, 0), cb = (*gb)(s, y, x, 0);
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const T a = soft_sign((*ga)(s, y + dy, x + dx, 0) - ca);
            const T b = soft_sign((*gb)(s, y + dy, x + dx, 0) - cb);
            hd += hamming_dist(a - b);
          }
        }
        total += std::pow(hd * hd + eps2, alpha);
      }
    }
  }

  Node<T>*pp = pred.get(), *gp = gt.get();
  auto node = make_node<T>(Tensor<T>::scalar(total * inv_valid), {pred, gt}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, pp, gp, ga, gb, r, tau, c0, eps2, alpha, inv_valid] {
      const int n = pp->value.n, h = pp->value.h, w = pp->value.w;
      Tensor<T> dga(n, h, w, 1), dgb(n, h, w, 1);
      const T g0 = self->grad.data[0] * inv_valid;
      for (int s = 0; s < n; ++s) {
        for (int y = r; y < h - r; ++y) {
          for (int x = r; x < w - r; ++x) {
            const T ca = (*ga)(s, y, x, 0), cb = (*gb)(s, y, x, 0);
            T hd = 0;
            for (int dy = -r; dy <= r; ++dy)
              for (int dx = -r; dx <= r; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const T da = (*ga)(s, y + dy, x + dx, 0) - ca;
                const T db = (*gb)(s, y + dy, x + dx, 0) - cb;
                const T a = da / std::sqrt(da * da + tau * tau);
                const T b = db / std::sqrt(db * db + tau * tau);
                const T e = a - b;
                hd += e * e / (e * e + c0);
              }
            // d/dH of (H^2 + eps^2)^alpha
            const T drho = alpha * T(2) * hd * std::pow(hd * hd + eps2, alpha - T(1));
            const T coef = g0 * drho;
            for (int dy = -r; dy <= r; ++dy)
              for (int dx = -r; dx <= r; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const T da = (*ga)(s, y + dy, x + dx, 0) - ca;
                const T db = (*gb)(s, y + dy, x + dx, 0) - cb;
                const T na2 = da * da + tau * tau;
                const T nb2 = db * db + tau * tau;
                const T a = da / std::sqrt(na2);
                const T b = db / std::sqrt(nb2);
                const T e = a - b;
                const T dphi = T(2) * e * c0 / ((e * e + c0) * (e * e + c0));
                const T fa = tau * tau / (na2 * std::sqrt(na2));  // f'(da)
                const T fb = tau * tau / (nb2 * std::sqrt(nb2));
                const T wa = coef * dphi * fa;
                const T wb = -coef * dphi * fb;
                dga(s, y + dy, x + dx, 0) += wa;
                dga(s, y, x, 0) -= wa;
                dgb(s, y + dy, x + dx, 0) += wb;
                dgb(s, y, x, 0) -= wb;
              }
          }
        }
      }
      const int c = pp->value.c;
      if (pp->requires_grad) {
        pp->ensure_grad();
        for (Eigen::Index p = 0; p < dga.size(); ++p)
          for (int ci = 0; ci < c; ++ci)
            pp->grad.data[p * c + ci] += dga.data[p] * detail::luma_weight<T>(ci, c);
      }
      if (gp->requires_grad) {
        gp->ensure_grad();
        for (Eigen::Index p = 0; p < dgb.size(); ++p)
          for (int ci = 0; ci < c; ++ci)
            gp->grad.data[p * c + ci] += dgb.data[p] * detail::luma_weight<T>(ci, c);
      }
    };
  }
  return node;
}

// Eq-style combination: charbonnier + lambda * census.
template <typename T>
inline Var<T> total_loss(const Var<T>& pred, const Var<T>& gt, const LossConfig& cfg = {}) {
  auto l = charbonnier(pred, gt, cfg);
  if (cfg.lambda_census != 0.0) {
    l = add(l, scale(census_loss(pred, gt, cfg), static_cast<T>(cfg.lambda_census)));
  }
  return l;
}

}  // namespace ebme
