#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ebme/tensor.hpp"

namespace ebme {

// Define-by-run reverse-mode tape. Nodes own their parents through
// shared_ptr, so releasing the loss root frees the whole iteration graph
// while leaf parameters (held by the optimizer) survive.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily by ensure_grad()
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;  // reads this->grad, accumulates parents'
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.n, value.h, value.w, value.c);
  }
  void zero_grad() {
    if (grad.size() > 0) grad.data.setZero();
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
inline Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
inline Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents,
                        std::function<void()> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    if (p->requires_grad) { n->requires_grad = true; break; }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

// Backpropagates from a scalar (or any) root; seeds d root / d root = 1.
template <typename T>
inline void backward(const Var<T>& root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) {
    n->ensure_grad();
    n->zero_grad();
  }
  root->grad.data.setOnes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn();
  }
}

// ---- generic elementwise ops -------------------------------------------

// f: value map; df: derivative as a function of (x, y).
template <typename T, typename F, typename DF>
inline Var<T> unary_op(const Var<T>& x, F f, DF df) {
  Tensor<T> out = x->value;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data[i] = f(out.data[i]);
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, df] {
      xp->ensure_grad();
      for (Eigen::Index i = 0; i < self->grad.size(); ++i) {
        xp->grad.data[i] += self->grad.data[i] * df(xp->value.data[i], self->value.data[i]);
      }
    };
  }
  return node;
}

template <typename T>
inline Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> out = a->value;
  out.data += b->value.data;
  Node<T>*ap = a.get(), *bp = b.get();
  auto node = make_node<T>(std::move(out), {a, b}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, ap, bp] {
      if (ap->requires_grad) { ap->ensure_grad(); ap->grad.data += self->grad.data; }
      if (bp->requires_grad) { bp->ensure_grad(); bp->grad.data += self->grad.data; }
    };
  }
  return node;
}

template <typename T>
inline Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "sub");
  Tensor<T> out = a->value;
  out.data -= b->value.data;
  Node<T>*ap = a.get(), *bp = b.get();
  auto node = make_node<T>(std::move(out), {a, b}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, ap, bp] {
      if (ap->requires_grad) { ap->ensure_grad(); ap->grad.data += self->grad.data; }
      if (bp->requires_grad) { bp->ensure_grad(); bp->grad.data -= self->grad.data; }
    };
  }
  return node;
}

template <typename T>
inline Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "mul");
  Tensor<T> out = a->value;
  out.data *= b->value.data;
  Node<T>*ap = a.get(), *bp = b.get();
  auto node = make_node<T>(std::move(out), {a, b}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, ap, bp] {
      if (ap->requires_grad) { ap->ensure_grad(); ap->grad.data += self->grad.data * bp->value.data; }
      if (bp->requires_grad) { bp->ensure_grad(); bp->grad.data += self->grad.data * ap->value.data; }
    };
  }
  return node;
}

template <typename T>
inline Var<T> scale(const Var<T>& x, T s) {
  Tensor<T> out = x->value;
  out.data *= s;
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, s] {
      xp->ensure_grad();
      xp->grad.data += self->grad.data * s;
    };
  }
  return node;
}

// Multiplies channel i by factors[i].
template <typename T>
inline Var<T> scale_channels(const Var<T>& x, std::vector<T> factors) {
  const Tensor<T>& xv = x->value;
  if (static_cast<int>(factors.size()) != xv.c) {
    throw DimensionError("scale_channels: factor count != channels");
  }
  Tensor<T> out = xv;
  const int c = xv.c;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data[i] *= factors[i % c];
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, factors = std::move(factors), c] {
      xp->ensure_grad();
      for (Eigen::Index i = 0; i < self->grad.size(); ++i) {
        xp->grad.data[i] += self->grad.data[i] * factors[i % c];
      }
    };
  }
  return node;
}

template <typename T>
inline Var<T> add_const(const Var<T>& x, T v) {
  return unary_op(x, [v](T a) { return a + v; }, [](T, T) { return T(1); });
}

template <typename T>
inline Var<T> square(const Var<T>& x) {
  return unary_op(x, [](T a) { return a * a; }, [](T a, T) { return T(2) * a; });
}

// (x)^p for x > 0 (used on x^2 + eps^2 which is strictly positive).
template <typename T>
inline Var<T> pow_positive(const Var<T>& x, T p) {
  return unary_op(
      x, [p](T a) { return std::pow(a, p); },
      [p](T a, T y) { return p * y / a; });
}

template <typename T>
inline Var<T> leaky_relu(const Var<T>& x, T slope = T(0.1)) {
  return unary_op(
      x, [slope](T a) { return a >= T(0) ? a : slope * a; },
      [slope](T a, T) { return a >= T(0) ? T(1) : slope; });
}

template <typename T>
inline Var<T> sigmoid(const Var<T>& x) {
  return unary_op(
      x, [](T a) { return T(1) / (T(1) + std::exp(-a)); },
      [](T, T y) { return y * (T(1) - y); });
}

// Broadcast multiply of x (n,h,w,c) by a single-channel map m (n,h,w,1).
template <typename T>
inline Var<T> mul_map(const Var<T>& x, const Var<T>& m) {
  const Tensor<T>&xv = x->value, &mv = m->value;
  if (mv.c != 1 || mv.n != xv.n || mv.h != xv.h || mv.w != xv.w) {
    throw DimensionError("mul_map: map must be single-channel with matching n,h,w");
  }
  Tensor<T> out = xv;
  const Eigen::Index pixels = static_cast<Eigen::Index>(xv.n) * xv.h * xv.w;
  for (Eigen::Index p = 0; p < pixels; ++p) {
    out.data.segment(p * xv.c, xv.c) *= mv.data[p];
  }
  Node<T>*xp = x.get(), *mp = m.get();
  auto node = make_node<T>(std::move(out), {x, m}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, mp, pixels] {
      const int c = xp->value.c;
      if (xp->requires_grad) {
        xp->ensure_grad();
        for (Eigen::Index p = 0; p < pixels; ++p) {
          xp->grad.data.segment(p * c, c) += self->grad.data.segment(p * c, c) * mp->value.data[p];
        }
      }
      if (mp->requires_grad) {
        mp->ensure_grad();
        for (Eigen::Index p = 0; p < pixels; ++p) {
          mp->grad.data[p] += (self->grad.data.segment(p * c, c) * xp->value.data.segment(p * c, c)).sum();
        }
      }
    };
  }
  return node;
}

template <typename T>
inline Var<T> mean_all(const Var<T>& x) {
  const T inv = T(1) / static_cast<T>(x->value.size());
  Tensor<T> out = Tensor<T>::scalar(x->value.data.sum() * inv);
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, inv] {
      xp->ensure_grad();
      xp->grad.data += self->grad.data[0] * inv;
    };
  }
  return node;
}

template <typename T>
inline Var<T> sum_all(const Var<T>& x) {
  Tensor<T> out = Tensor<T>::scalar(x->value.data.sum());
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp] {
      xp->ensure_grad();
      xp->grad.data += self->grad.data[0];
    };
  }
  return node;
}

// ---- channel concat / slice ---------------------------------------------

template <typename T>
inline Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw DimensionError("concat_channels: empty input list");
  int n = xs[0]->value.n, h = xs[0]->value.h, w = xs[0]->value.w, ctotal = 0;
  for (const auto& x : xs) {
    if (x->value.n != n || x->value.h != h || x->value.w != w) {
      throw DimensionError("concat_channels: spatial/batch shape mismatch");
    }
    ctotal += x->value.c;
  }
  Tensor<T> out(n, h, w, ctotal);
  const Eigen::Index pixels = static_cast<Eigen::Index>(n) * h * w;
  {
    int off = 0;
    for (const auto& x : xs) {
      const int ci = x->value.c;
      for (Eigen::Index p = 0; p < pixels; ++p) {
        out.data.segment(p * ctotal + off, ci) = x->value.data.segment(p * ci, ci);
      }
      off += ci;
    }
  }
  std::vector<Node<T>*> raw;
  for (const auto& x : xs) raw.push_back(x.get());
  auto node = make_node<T>(std::move(out), xs, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, raw, pixels, ctotal] {
      int off = 0;
      for (Node<T>* x : raw) {
        const int ci = x->value.c;
        if (x->requires_grad) {
          x->ensure_grad();
          for (Eigen::Index p = 0; p < pixels; ++p) {
            x->grad.data.segment(p * ci, ci) += self->grad.data.segment(p * ctotal + off, ci);
          }
        }
        off += ci;
      }
    };
  }
  return node;
}

template <typename T>
inline Var<T> slice_channels(const Var<T>& x, int start, int count) {
  const Tensor<T>& xv = x->value;
  if (start < 0 || count < 1 || start + count > xv.c) {
    throw RangeError("slice_channels: channel range out of bounds");
  }
  Tensor<T> out(xv.n, xv.h, xv.w, count);
  const Eigen::Index pixels = static_cast<Eigen::Index>(xv.n) * xv.h * xv.w;
  for (Eigen::Index p = 0; p < pixels; ++p) {
    out.data.segment(p * count, count) = xv.data.segment(p * xv.c + start, count);
  }
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, start, count, pixels] {
      xp->ensure_grad();
      const int c = xp->value.c;
      for (Eigen::Index p = 0; p < pixels; ++p) {
        xp->grad.data.segment(p * c + start, count) += self->grad.data.segment(p * count, count);
      }
    };
  }
  return node;
}

// Softmax over the channel dimension.
template <typename T>
inline Var<T> softmax_channels(const Var<T>& x) {
  const Tensor<T>& xv = x->value;
  Tensor<T> out = xv;
  const Eigen::Index pixels = static_cast<Eigen::Index>(xv.n) * xv.h * xv.w;
  for (Eigen::Index p = 0; p < pixels; ++p) {
    auto seg = out.data.segment(p * xv.c, xv.c);
    seg = (seg - seg.maxCoeff()).exp();
    seg /= seg.sum();
  }
  Node<T>* xp = x.get();
  auto node = make_node<T>(std::move(out), {x}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, xp, pixels] {
      xp->ensure_grad();
      const int c = xp->value.c;
      for (Eigen::Index p = 0; p < pixels; ++p) {
        auto y = self->value.data.segment(p * c, c);
        auto g = self->grad.data.segment(p * c, c);
        T dot = (y * g).sum();
        xp->grad.data.segment(p * c, c) += y * (g - dot);
      }
    };
  }
  return node;
}

}  // namespace ebme
