#pragma once

#include <string>
#include <vector>

#include "ebme/correlation.hpp"
#include "ebme/nn.hpp"
#include "ebme/pyramid.hpp"
#include "ebme/warp.hpp"

namespace ebme {

// How the recurrent unit aligns the two frames before feature extraction.
// Middle warps both frames toward the hidden frame at t=0.5 with half-scaled
// motion and needs a single correlation volume; Forward and Backward align
// the frames toward each other and need two.
enum class WarpMode { Middle, Forward, Backward };

inline std::string warp_mode_name(WarpMode m) {
  switch (m) {
    case WarpMode::Middle: return "middle";
    case WarpMode::Forward: return "forward";
    case WarpMode::Backward: return "backward";
  }
  return "middle";
}

inline WarpMode warp_mode_from_name(const std::string& s) {
  if (s == "middle") return WarpMode::Middle;
  if (s == "forward") return WarpMode::Forward;
  if (s == "backward") return WarpMode::Backward;
  throw InputError("unknown warp mode: " + s);
}

struct EstimatorConfig {
  int levels_train = 3;
  int encoder_stages = 2;  // 1, 2 or 3 downsampling stages
  int base_width = 16;     // width doubles at each downsampling
  int corr_radius = 4;
  bool use_correlation = true;
  // Mean-normalized correlations of small feature vectors are two orders of
  // magnitude weaker than the other head inputs; a fixed gain rebalances them
  // so the head does not have to grow large weights before it can read them.
  double corr_gain = 16.0;
  WarpMode warp_mode = WarpMode::Middle;
  std::vector<int> head_widths = {128, 128, 96, 64, 32};  // 6th layer outputs 4

  int downsample_factor() const { return 1 << encoder_stages; }
  int feature_channels() const { return base_width << (encoder_stages - 1); }
  // Layer counts per stage: 1-stage of 9 layers, 2-stage of 3+6, 3-stage of 3+3+3.
  std::vector<int> stage_layers() const {
    if (encoder_stages == 1) return {9};
    if (encoder_stages == 2) return {3, 6};
    if (encoder_stages == 3) return {3, 3, 3};
    throw RangeError("encoder_stages must be 1, 2 or 3");
  }
};

// Shared feature encoder applied to both (warped) frames. The first layer of
// each stage has stride 2; width doubles per stage.
template <typename T>
struct FeatureEncoder {
  std::vector<Conv2dLayer<T>> layers;

  FeatureEncoder() = default;
  FeatureEncoder(const EstimatorConfig& cfg, std::mt19937& rng) {
    int cin = 3;
    int width = cfg.base_width;
    for (int stage_count : cfg.stage_layers()) {
      for (int l = 0; l < stage_count; ++l) {
        layers.emplace_back(cin, width, 3, l == 0 ? 2 : 1, rng);
        cin = width;
      }
      width *= 2;
    }
  }

  Var<T> operator()(Var<T> x) const {
    for (const auto& layer : layers) x = leaky_relu(layer(x));
    return x;
  }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    for (size_t i = 0; i < layers.size(); ++i) {
      layers[i].collect(prefix + ".l" + std::to_string(i), out);
    }
  }
};

// Six-layer convolutional predictor of the 4-channel bi-directional motion
// residual at feature resolution.
template <typename T>
struct MotionHead {
  std::vector<Conv2dLayer<T>> layers;

  MotionHead() = default;
  MotionHead(int cin, const EstimatorConfig& cfg, std::mt19937& rng) {
    if (cfg.head_widths.size() != 5) throw RangeError("motion head needs 5 hidden widths");
    for (int width : cfg.head_widths) {
      layers.emplace_back(cin, width, 3, 1, rng);
      cin = width;
    }
    layers.emplace_back(cin, 4, 3, 1, rng);
  }

  Var<T> operator()(Var<T> x) const {
    for (size_t i = 0; i + 1 < layers.size(); ++i) x = leaky_relu(layers[i](x));
    return layers.back()(x);  // linear output
  }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    for (size_t i = 0; i < layers.size(); ++i) {
      layers[i].collect(prefix + ".l" + std::to_string(i), out);
    }
  }
};

// Pyramid recurrent bi-directional motion estimator. One shared recurrent
// unit (encoder + correlation + motion head) is applied coarse-to-fine over
// image pyramids; the unit's weights do not depend on the level count, so
// the test-time pyramid depth is a free runtime choice.
template <typename T>
struct BiMotionEstimator {
  EstimatorConfig cfg;
  FeatureEncoder<T> encoder;
  MotionHead<T> head;
  mutable long estimate_calls = 0;  // instrumentation for motion reuse checks

  BiMotionEstimator() = default;
  BiMotionEstimator(const EstimatorConfig& cfg_, std::mt19937& rng)
      : cfg(cfg_), encoder(cfg_, rng), head(head_input_channels(cfg_), cfg_, rng) {}

  static int head_input_channels(const EstimatorConfig& cfg) {
    const int feat = 2 * cfg.feature_channels();
    const int side = 2 * cfg.corr_radius + 1;
    const int volumes = cfg.warp_mode == WarpMode::Middle ? 1 : 2;
    return feat + 4 + (cfg.use_correlation ? volumes * side * side : 0);
  }

  // One refinement step at a single pyramid level. init is the 4-channel
  // (f01.u, f01.v, f10.u, f10.v) motion at this level's resolution.
  Var<T> recurrent_unit(const Var<T>& i0, const Var<T>& i1, const Var<T>& init) const {
    const Tensor<T>& iv = i0->value;
    if (!iv.same_shape(i1->value)) {
      throw DimensionError("recurrent_unit: frame shapes differ");
    }
    if (init->value.h != iv.h || init->value.w != iv.w || init->value.c != 4) {
      throw DimensionError("recurrent_unit: init motion must be 4-channel at frame resolution");
    }
    auto f01 = slice_channels(init, 0, 2);
    auto f10 = slice_channels(init, 2, 2);

    Var<T> fa, fb;
    std::vector<Var<T>> volumes;
    switch (cfg.warp_mode) {
      case WarpMode::Middle: {
        fa = encoder(forward_warp_average(i0, scale(f01, T(0.5))));
        fb = encoder(forward_warp_average(i1, scale(f10, T(0.5))));
        if (cfg.use_correlation) {
          volumes.push_back(scale(local_correlation(fa, fb, cfg.corr_radius), T(cfg.corr_gain)));
        }
        break;
      }
      case WarpMode::Forward: {
        fa = encoder(forward_warp_average(i0, f01));  // aligned to frame 1
        fb = encoder(forward_warp_average(i1, f10));  // aligned to frame 0
        if (cfg.use_correlation) {
          volumes.push_back(scale(local_correlation(fa, encoder(i1), cfg.corr_radius), T(cfg.corr_gain)));
          volumes.push_back(scale(local_correlation(fb, encoder(i0), cfg.corr_radius), T(cfg.corr_gain)));
        }
        break;
      }
      case WarpMode::Backward: {
        fa = encoder(backward_warp(i1, f01));  // frame 1 gathered toward frame 0
        fb = encoder(backward_warp(i0, f10));
        if (cfg.use_correlation) {
          volumes.push_back(scale(local_correlation(encoder(i0), fa, cfg.corr_radius), T(cfg.corr_gain)));
          volumes.push_back(scale(local_correlation(encoder(i1), fb, cfg.corr_radius), T(cfg.corr_gain)));
        }
        break;
      }
    }

    const int down = cfg.downsample_factor();
    std::vector<Var<T>> inputs = std::move(volumes);
    inputs.push_back(fa);
    inputs.push_back(fb);
    inputs.push_back(resize_flow_to(init, iv.h / down, iv.w / down));
    auto residual = head(concat_channels(inputs));
    return add(init, resize_flow_to(residual, iv.h, iv.w));
  }

  // Full coarse-to-fine pass; returns the 4-channel motion at input
  // resolution as a graph node (images enter as constants).
  Var<T> estimate_var(const Tensor<T>& i0, const Tensor<T>& i1, int levels) const {
    require_same_shape(i0, i1, "estimate_bimotion");
    if (levels < 1) throw RangeError("estimate_bimotion: levels must be >= 1");
    ++estimate_calls;

    // Replicate-pad so every level downsamples cleanly through the encoder.
    const int mult = 1 << (levels - 1 + cfg.encoder_stages);
    const int ph = (i0.h + mult - 1) / mult * mult;
    const int pw = (i0.w + mult - 1) / mult * mult;
    Tensor<T> p0 = pad_replicate(i0, 0, ph - i0.h, 0, pw - i0.w);
    Tensor<T> p1 = pad_replicate(i1, 0, ph - i1.h, 0, pw - i1.w);

    auto pyr0 = build_image_pyramid(p0, levels);
    auto pyr1 = build_image_pyramid(p1, levels);

    // zero initialization at the top (coarsest) level
    Var<T> motion = leaf(Tensor<T>(p0.n, pyr0.back().h, pyr0.back().w, 4));
    for (int l = levels - 1; l >= 0; --l) {
      motion = recurrent_unit(leaf(pyr0[l]), leaf(pyr1[l]), motion);
      if (l > 0) motion = resize_flow_to(motion, pyr0[l - 1].h, pyr0[l - 1].w);
    }
    return crop(motion, 0, 0, i0.h, i0.w);
  }

  BiMotion<T> estimate(const Tensor<T>& i0, const Tensor<T>& i1, int levels) const {
    auto motion = estimate_var(i0, i1, levels);
    BiMotion<T> bm;
    bm.f01 = slice_channels(motion, 0, 2)->value;
    bm.f10 = slice_channels(motion, 2, 2)->value;
    return bm;
  }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    encoder.collect(prefix + ".encoder", out);
    head.collect(prefix + ".head", out);
  }
};

}  // namespace ebme
