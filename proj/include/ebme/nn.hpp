#pragma once

#include <map>
#include <string>

#include "ebme/conv.hpp"

namespace ebme {

// Ordered name -> parameter map; the ordering makes checkpoints and
// optimizer traversal deterministic.
template <typename T>
using ParamMap = std::map<std::string, Var<T>>;

template <typename T>
inline long param_count(const ParamMap<T>& params, const std::string& prefix = "") {
  long total = 0;
  for (const auto& [name, var] : params) {
    if (name.rfind(prefix, 0) == 0) total += static_cast<long>(var->value.size());
  }
  return total;
}

// 3x3 (or kxk) convolution layer with He-style init.
template <typename T>
struct Conv2dLayer {
  Var<T> weight, bias;
  int stride = 1, pad = 1;

  Conv2dLayer() = default;

  Conv2dLayer(int cin, int cout, int k, int stride_, std::mt19937& rng)
      : stride(stride_), pad(k / 2) {
    Tensor<T> w(k, k, cin, cout);
    fill_normal(w, rng, static_cast<T>(std::sqrt(2.0 / (k * k * cin))));
    weight = leaf(std::move(w), true);
    bias = leaf(Tensor<T>(1, 1, 1, cout), true);
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, stride, pad); }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    out[prefix + ".weight"] = weight;
    out[prefix + ".bias"] = bias;
  }
};

}  // namespace ebme
