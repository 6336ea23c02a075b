#pragma once

#include <array>
#include <string>
#include <vector>

#include "ebme/estimator.hpp"

namespace ebme {

// ---- convex downsampling --------------------------------------------------

// Convex 2x -> 1x reduction: each output pixel is a nonnegative, sum-to-one
// weighted combination of the 5x5 neighborhood centered at (2y, 2x) on the
// 2x image. Borders replicate. filters is (n,h,w,25), already normalized.
template <typename T>
inline Tensor<T> convex_downsample(const Tensor<T>& img2x, const Tensor<T>& filters) {
  if (filters.c != 25) throw DimensionError("convex_downsample: filters must have 25 channels");
  if (img2x.h != 2 * filters.h || img2x.w != 2 * filters.w || img2x.n != filters.n) {
    throw DimensionError("convex_downsample: image must be exactly 2x the filter grid");
  }
  Tensor<T> out(filters.n, filters.h, filters.w, img2x.c);
  for (int s = 0; s < out.n; ++s)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x)
        for (int k = 0; k < 25; ++k) {
          const T f = filters(s, y, x, k);
          const int sy = std::clamp(2 * y + k / 5 - 2, 0, img2x.h - 1);
          const int sx = std::clamp(2 * x + k % 5 - 2, 0, img2x.w - 1);
          for (int ci = 0; ci < img2x.c; ++ci) out(s, y, x, ci) += f * img2x(s, sy, sx, ci);
        }
  return out;
}

template <typename T>
inline Var<T> convex_downsample(const Var<T>& img2x, const Var<T>& filters) {
  Tensor<T> out = convex_downsample(img2x->value, filters->value);
  Node<T>*ip = img2x.get(), *fp = filters.get();
  auto node = make_node<T>(std::move(out), {img2x, filters}, nullptr);
  if (node->requires_grad) {
    Node<T>* self = node.get();
    node->backward_fn = [self, ip, fp] {
      const Tensor<T>& iv = ip->value;
      const Tensor<T>& fv = fp->value;
      if (ip->requires_grad) ip->ensure_grad();
      if (fp->requires_grad) fp->ensure_grad();
      for (int s = 0; s < fv.n; ++s)
        for (int y = 0; y < fv.h; ++y)
          for (int x = 0; x < fv.w; ++x)
            for (int k = 0; k < 25; ++k) {
              const int sy = std::clamp(2 * y + k / 5 - 2, 0, iv.h - 1);
              const int sx = std::clamp(2 * x + k % 5 - 2, 0, iv.w - 1);
              T dot = 0;
              for (int ci = 0; ci < iv.c; ++ci) {
                const T g = self->grad(s, y, x, ci);
                if (ip->requires_grad) ip->grad(s, sy, sx, ci) += g * fv(s, y, x, k);
                dot += g * iv(s, sy, sx, ci);
              }
              if (fp->requires_grad) fp->grad(s, y, x, k) += dot;
            }
    };
  }
  return node;
}

// ---- context extractor ----------------------------------------------------

struct SynthesisConfig {
  std::vector<int> ctx_widths = {16, 24, 32, 48};        // 4 pyramid levels
  std::vector<int> enc_widths = {16, 32, 64, 128, 320};  // stage 0 .. bottleneck
};

// Small strided extractor producing 4-level pyramid context features at
// scales 1, 1/2, 1/4 and 1/8.
template <typename T>
struct ContextExtractor {
  std::vector<Conv2dLayer<T>> in_convs, mix_convs;

  ContextExtractor() = default;
  ContextExtractor(const SynthesisConfig& cfg, std::mt19937& rng) {
    int cin = 3;
    for (size_t l = 0; l < cfg.ctx_widths.size(); ++l) {
      const int width = cfg.ctx_widths[l];
      in_convs.emplace_back(cin, width, 3, l == 0 ? 1 : 2, rng);
      mix_convs.emplace_back(width, width, 3, 1, rng);
      cin = width;
    }
  }

  std::vector<Var<T>> operator()(const Var<T>& img) const {
    std::vector<Var<T>> levels;
    Var<T> x = img;
    for (size_t l = 0; l < in_convs.size(); ++l) {
      x = leaky_relu(mix_convs[l](leaky_relu(in_convs[l](x))));
      levels.push_back(x);
    }
    return levels;
  }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    for (size_t i = 0; i < in_convs.size(); ++i) {
      in_convs[i].collect(prefix + ".in" + std::to_string(i), out);
      mix_convs[i].collect(prefix + ".mix" + std::to_string(i), out);
    }
  }
};

// ---- synthesis outputs ------------------------------------------------------

template <typename T>
struct SynthesisOutput {
  Tensor<T> mask;      // (n,h,w,1) in [0,1]
  Tensor<T> residual;  // (n,h,w,3)
  Tensor<T> frame;     // (n,h,w,3) clamped to [0,1]
};

// Graph-side result used during training: the frame before clamping.
template <typename T>
struct SynthesisVarOutput {
  Var<T> mask;
  Var<T> residual;
  Var<T> frame;  // unclamped combination of Eq-style mask blending + residual
};

// ---- U-shaped synthesis network --------------------------------------------

// Context-aware frame synthesis: consumes the two forward-warped frames,
// forward-warped context pyramids of both frames, the original frames and
// the time-scaled bi-directional motion, and emits a blend mask plus a
// residual image. Four downsampling and four upsampling stages.
template <typename T>
struct SynthesisNetwork {
  SynthesisConfig cfg;
  Conv2dLayer<T> enc0_a, enc0_b;
  std::vector<Conv2dLayer<T>> down_convs, fuse_convs;  // stages 1..3
  Conv2dLayer<T> bott_a, bott_b;                       // stage 4
  std::vector<Conv2dLayer<T>> up_a, up_b;              // stages 3..0
  Conv2dLayer<T> out_conv;
  // lightweight convex-filter head (used only by the high-resolution path)
  Conv2dLayer<T> filter_a, filter_b;

  SynthesisNetwork() = default;
  SynthesisNetwork(const SynthesisConfig& cfg_, std::mt19937& rng) : cfg(cfg_) {
    const auto& cw = cfg.ctx_widths;
    const auto& ew = cfg.enc_widths;
    const int in0 = 6 + 6 + 4 + 2 * cw[0];  // warped, original, flows, contexts
    enc0_a = Conv2dLayer<T>(in0, ew[0], 3, 1, rng);
    enc0_b = Conv2dLayer<T>(ew[0], ew[0], 3, 1, rng);
    for (int l = 1; l <= 3; ++l) {
      down_convs.emplace_back(ew[l - 1], ew[l], 3, 2, rng);
      fuse_convs.emplace_back(ew[l] + 2 * cw[l], ew[l], 3, 1, rng);
    }
    bott_a = Conv2dLayer<T>(ew[3], ew[4], 3, 2, rng);
    bott_b = Conv2dLayer<T>(ew[4], ew[4], 3, 1, rng);
    for (int l = 3; l >= 0; --l) {
      up_a.emplace_back(ew[l + 1] + ew[l], ew[l], 3, 1, rng);
      up_b.emplace_back(ew[l], ew[l], 3, 1, rng);
    }
    out_conv = Conv2dLayer<T>(ew[0], 4, 3, 1, rng);  // mask logit + residual
    filter_a = Conv2dLayer<T>(ew[0], 32, 3, 2, rng);
    filter_b = Conv2dLayer<T>(32, 25, 3, 1, rng);
  }

  struct Decoded {
    Var<T> head;      // (n,h,w,4): mask logit and residual
    Var<T> features;  // full-resolution decoder features
  };

  // inputs at scale 0 plus warped context features per scale.
  Decoded run(const Var<T>& in0, const std::array<std::vector<Var<T>>, 4>& ctx) const {
    std::vector<Var<T>> skips;
    Var<T> x = leaky_relu(enc0_b(leaky_relu(enc0_a(in0))));
    skips.push_back(x);
    for (int l = 1; l <= 3; ++l) {
      x = leaky_relu(down_convs[l - 1](x));
      std::vector<Var<T>> cat = {x, ctx[l][0], ctx[l][1]};
      x = leaky_relu(fuse_convs[l - 1](concat_channels(cat)));
      skips.push_back(x);
    }
    x = leaky_relu(bott_b(leaky_relu(bott_a(x))));
    for (int l = 3; l >= 0; --l) {
      x = resize_bilinear(x, skips[l]->value.h, skips[l]->value.w);
      x = leaky_relu(up_a[3 - l](concat_channels<T>({x, skips[l]})));
      x = leaky_relu(up_b[3 - l](x));
    }
    return {out_conv(x), x};
  }

  void collect(const std::string& prefix, ParamMap<T>& out) const {
    enc0_a.collect(prefix + ".enc0a", out);
    enc0_b.collect(prefix + ".enc0b", out);
    for (size_t i = 0; i < down_convs.size(); ++i) {
      down_convs[i].collect(prefix + ".down" + std::to_string(i + 1), out);
      fuse_convs[i].collect(prefix + ".fuse" + std::to_string(i + 1), out);
    }
    bott_a.collect(prefix + ".bott_a", out);
    bott_b.collect(prefix + ".bott_b", out);
    for (size_t i = 0; i < up_a.size(); ++i) {
      up_a[i].collect(prefix + ".up" + std::to_string(3 - i) + "a", out);
      up_b[i].collect(prefix + ".up" + std::to_string(3 - i) + "b", out);
    }
    out_conv.collect(prefix + ".out", out);
  }

  void collect_filter_head(const std::string& prefix, ParamMap<T>& out) const {
    filter_a.collect(prefix + ".filter_a", out);
    filter_b.collect(prefix + ".filter_b", out);
  }
};

}  // namespace ebme
