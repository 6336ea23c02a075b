#pragma once

#include "ebme/synthesis.hpp"

namespace ebme {

struct ModelConfig {
  EstimatorConfig estimator;
  SynthesisConfig synthesis;
  int train_crop = 128;  // training resolution; anchors test-level selection
};

// The full interpolation pipeline: bi-directional motion estimation followed
// by context-aware synthesis. EBME runs the base synthesis path; EBME-H runs
// it at 2x resolution and reduces back with learned convex filters.
template <typename T>
struct EbmeModel {
  ModelConfig cfg;
  BiMotionEstimator<T> estimator;
  ContextExtractor<T> context;
  SynthesisNetwork<T> synthesis;
  mutable long synthesis_calls = 0;

  EbmeModel() = default;
  EbmeModel(const ModelConfig& cfg_, uint64_t seed) : cfg(cfg_) {
    std::mt19937 rng(static_cast<uint32_t>(seed ^ 0x9e3779b9));
    estimator = BiMotionEstimator<T>(cfg.estimator, rng);
    context = ContextExtractor<T>(cfg.synthesis, rng);
    synthesis = SynthesisNetwork<T>(cfg.synthesis, rng);
  }

  void collect(ParamMap<T>& out, bool include_filter_head = true) const {
    estimator.collect("estimator", out);
    context.collect("context", out);
    synthesis.collect("synthesis", out);
    if (include_filter_head) synthesis.collect_filter_head("synthesis", out);
  }

  ParamMap<T> params(bool include_filter_head = true) const {
    ParamMap<T> out;
    collect(out, include_filter_head);
    return out;
  }

  struct BaseRun {
    SynthesisVarOutput<T> out;
    Var<T> features;  // full-resolution decoder features (for the filter head)
  };

  // Base synthesis from a 4-channel motion graph node at frame resolution.
  BaseRun synthesize_base_run(const Tensor<T>& i0, const Tensor<T>& i1,
                              const Var<T>& motion, T t) const {
    if (!(t > T(0) && t < T(1))) throw RangeError("synthesize: t must be in (0,1)");
    require_same_shape(i0, i1, "synthesize");
    if (motion->value.h != i0.h || motion->value.w != i0.w || motion->value.c != 4) {
      throw DimensionError("synthesize: motion must be 4-channel at frame resolution");
    }
    ++synthesis_calls;
    const int oh = i0.h, ow = i0.w;
    const int ph = (oh + 15) / 16 * 16, pw = (ow + 15) / 16 * 16;
    auto v0 = leaf(pad_replicate(i0, 0, ph - oh, 0, pw - ow));
    auto v1 = leaf(pad_replicate(i1, 0, ph - oh, 0, pw - ow));
    auto m = pad_replicate(motion, 0, ph - oh, 0, pw - ow);

    auto f0t = scale(slice_channels(m, 0, 2), t);
    auto f1t = scale(slice_channels(m, 2, 2), T(1) - t);
    auto warped0 = forward_warp_average(v0, f0t);
    auto warped1 = forward_warp_average(v1, f1t);

    auto ctx0 = context(v0);
    auto ctx1 = context(v1);
    std::array<std::vector<Var<T>>, 4> warped_ctx;
    for (int l = 0; l < 4; ++l) {
      const int lh = ctx0[l]->value.h, lw = ctx0[l]->value.w;
      auto fl0 = resize_flow_to(f0t, lh, lw);
      auto fl1 = resize_flow_to(f1t, lh, lw);
      warped_ctx[l] = {forward_warp_average(ctx0[l], fl0),
                       forward_warp_average(ctx1[l], fl1)};
    }

    auto in0 = concat_channels<T>(
        {warped0, warped1, v0, v1, f0t, f1t, warped_ctx[0][0], warped_ctx[0][1]});
    auto dec = synthesis.run(in0, warped_ctx);

    auto mask = sigmoid(slice_channels(dec.head, 0, 1));
    auto residual = slice_channels(dec.head, 1, 3);
    auto inv_mask = add_const(scale(mask, T(-1)), T(1));
    auto frame = add(add(mul_map(warped0, mask), mul_map(warped1, inv_mask)), residual);

    BaseRun run;
    run.out.mask = crop(mask, 0, 0, oh, ow);
    run.out.residual = crop(residual, 0, 0, oh, ow);
    run.out.frame = crop(frame, 0, 0, oh, ow);
    run.features = crop(dec.features, 0, 0, oh, ow);
    return run;
  }

  SynthesisVarOutput<T> synthesize_base_var(const Tensor<T>& i0, const Tensor<T>& i1,
                                            const Var<T>& motion, T t) const {
    return synthesize_base_run(i0, i1, motion, t).out;
  }

  // High-resolution variant: base synthesis at 2x, then learned convex 5x5
  // downsampling back to the original scale.
  SynthesisVarOutput<T> synthesize_highres_var(const Tensor<T>& i0, const Tensor<T>& i1,
                                               const Var<T>& motion, T t) const {
    const int h2 = 2 * i0.h, w2 = 2 * i0.w;
    Tensor<T> u0 = resize_bilinear(i0, h2, w2);
    Tensor<T> u1 = resize_bilinear(i1, h2, w2);
    auto m2 = resize_flow_to(motion, h2, w2);
    auto run = synthesize_base_run(u0, u1, m2, t);
    auto logits = synthesis.filter_b(leaky_relu(synthesis.filter_a(run.features)));
    auto filters = softmax_channels(logits);
    SynthesisVarOutput<T> out;
    out.mask = run.out.mask;          // at 2x resolution
    out.residual = run.out.residual;  // at 2x resolution
    out.frame = convex_downsample(run.out.frame, filters);
    return out;
  }

  static Tensor<T> clamp01(Tensor<T> x) {
    x.data = x.data.cwiseMax(T(0)).cwiseMin(T(1));
    return x;
  }

  static SynthesisOutput<T> finalize(const SynthesisVarOutput<T>& v) {
    SynthesisOutput<T> out;
    out.mask = v.mask->value;
    out.residual = v.residual->value;
    out.frame = clamp01(v.frame->value);
    return out;
  }

  SynthesisOutput<T> synthesize_base(const Tensor<T>& i0, const Tensor<T>& i1,
                                     const BiMotion<T>& bm, T t) const {
    return finalize(synthesize_base_var(i0, i1, motion_var(bm), t));
  }

  SynthesisOutput<T> synthesize_highres(const Tensor<T>& i0, const Tensor<T>& i1,
                                        const BiMotion<T>& bm, T t) const {
    return finalize(synthesize_highres_var(i0, i1, motion_var(bm), t));
  }

  static Var<T> motion_var(const BiMotion<T>& bm) {
    require_same_shape(bm.f01, bm.f10, "motion_var");
    return concat_channels<T>({leaf(bm.f01), leaf(bm.f10)});
  }

  // One-shot interpolation at time t.
  Tensor<T> interpolate(const Tensor<T>& i0, const Tensor<T>& i1, T t, int levels,
                        bool highres = false) const {
    // Detach the motion tape; inference never backpropagates through it.
    auto motion = motion_var(estimator.estimate(i0, i1, levels));
    auto v = highres ? synthesize_highres_var(i0, i1, motion, t)
                     : synthesize_base_var(i0, i1, motion, t);
    return clamp01(v.frame->value);
  }
};

}  // namespace ebme
