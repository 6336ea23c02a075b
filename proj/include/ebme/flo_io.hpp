#pragma once

#include <cstdint>
#include <fstream>

#include "ebme/tensor.hpp"

namespace ebme {

// Middlebury .flo: float32 magic 202021.25, int32 width/height, then
// row-major interleaved (u, v) float32 pairs.
inline constexpr float kFloMagic = 202021.25f;

inline void write_flo(const std::string& path, const Tensor<float>& flow) {
  if (flow.n != 1 || flow.c != 2) {
    throw DimensionError("flo: expected single 2-channel flow, got " + flow.shape_str());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("flo: cannot open for writing " + path);
  f.write(reinterpret_cast<const char*>(&kFloMagic), 4);
  int32_t w = flow.w, h = flow.h;
  f.write(reinterpret_cast<const char*>(&w), 4);
  f.write(reinterpret_cast<const char*>(&h), 4);
  // Tensor storage is already row-major interleaved u,v.
  f.write(reinterpret_cast<const char*>(flow.data.data()),
          static_cast<std::streamsize>(flow.size() * 4));
  if (!f) throw InputError("flo: write failed " + path);
}

inline Tensor<float> read_flo(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("flo: cannot open " + path);
  float magic = 0.f;
  int32_t w = 0, h = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  f.read(reinterpret_cast<char*>(&w), 4);
  f.read(reinterpret_cast<char*>(&h), 4);
  if (!f || magic != kFloMagic) throw InputError("flo: bad magic in " + path);
  if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16) {
    throw InputError("flo: implausible dimensions in " + path);
  }
  Tensor<float> flow(1, h, w, 2);
  f.read(reinterpret_cast<char*>(flow.data.data()),
         static_cast<std::streamsize>(flow.size() * 4));
  if (!f) throw InputError("flo: truncated data in " + path);
  return flow;
}

}  // namespace ebme
