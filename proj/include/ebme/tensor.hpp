#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

#include "ebme/core.hpp"

namespace ebme {

// Dense NHWC tensor. n is the batch dimension; single images use n = 1.
// Scalar type is templated so the same operators run in float for training
// and double for finite-difference checks.
template <typename T>
struct Tensor {
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;

  int n = 0, h = 0, w = 0, c = 0;
  Array data;

  Tensor() = default;
  Tensor(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_),
        data(Array::Zero(static_cast<Eigen::Index>(n_) * h_ * w_ * c_)) {}

  static Tensor zeros(int n, int h, int w, int c) { return Tensor(n, h, w, c); }

  static Tensor constant(int n, int h, int w, int c, T v) {
    Tensor t(n, h, w, c);
    t.data.setConstant(v);
    return t;
  }

  static Tensor scalar(T v) { return constant(1, 1, 1, 1, v); }

  Eigen::Index size() const { return data.size(); }

  Eigen::Index index(int in, int iy, int ix, int ic) const {
    return ((static_cast<Eigen::Index>(in) * h + iy) * w + ix) * c + ic;
  }

  T& operator()(int in, int iy, int ix, int ic) { return data[index(in, iy, ix, ic)]; }
  T operator()(int in, int iy, int ix, int ic) const { return data[index(in, iy, ix, ic)]; }

  bool same_shape(const Tensor& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }

  bool all_finite() const { return data.isFinite().all(); }

  std::string shape_str() const {
    return "[" + std::to_string(n) + "," + std::to_string(h) + "," +
           std::to_string(w) + "," + std::to_string(c) + "]";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.n = n; out.h = h; out.w = w; out.c = c;
    out.data = data.template cast<U>();
    return out;
  }
};

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                               const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         a.shape_str() + " vs " + b.shape_str());
  }
}

// Deterministic fills used for weight init and synthetic data.
template <typename T>
inline void fill_uniform(Tensor<T>& t, std::mt19937& rng, T lo, T hi) {
  std::uniform_real_distribution<double> dist(static_cast<double>(lo),
                                              static_cast<double>(hi));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<T>(dist(rng));
}

template <typename T>
inline void fill_normal(Tensor<T>& t, std::mt19937& rng, T stddev) {
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<T>(dist(rng));
}

}  // namespace ebme
