#pragma once

#include <cmath>
#include <vector>

#include "ebme/image_ops.hpp"

namespace ebme {

// Coarse-to-fine image stack: level 0 is the original, each following level
// a factor-2 bilinear downsample.
template <typename T>
using ImagePyramid = std::vector<Tensor<T>>;

template <typename T>
inline ImagePyramid<T> build_image_pyramid(const Tensor<T>& img, int levels) {
  if (levels < 1) throw RangeError("build_image_pyramid: levels must be >= 1");
  const int min_dim = 1 << (levels - 1);
  if (img.h < min_dim || img.w < min_dim) {
    throw RangeError("build_image_pyramid: image " + img.shape_str() +
                     " too small for " + std::to_string(levels) + " levels");
  }
  ImagePyramid<T> pyr;
  pyr.reserve(levels);
  pyr.push_back(img);
  for (int l = 1; l < levels; ++l) {
    const Tensor<T>& prev = pyr.back();
    pyr.push_back(resize_bilinear(prev, prev.h / 2, prev.w / 2));
  }
  return pyr;
}

// Test-time pyramid depth for inputs n times larger than the training
// resolution: ceil(levels_train + log2(n)), at least 1.
inline int compute_test_levels(int levels_train, double n) {
  if (!(n > 0)) throw RangeError("compute_test_levels: n must be > 0");
  const int levels = static_cast<int>(std::ceil(levels_train + std::log2(n) - 1e-12));
  return std::max(levels, 1);
}

}  // namespace ebme
