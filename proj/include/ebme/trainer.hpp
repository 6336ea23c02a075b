#pragma once

#include <filesystem>
#include <fstream>
#include <functional>

#include "ebme/checkpoint.hpp"
#include "ebme/data.hpp"
#include "ebme/evaluation.hpp"
#include "ebme/losses.hpp"

namespace ebme {

struct TrainConfig {
  int batch_size = 8;
  long iterations = 20'000;
  double lr_start = 2e-4;
  double lr_end = 2e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  int crop_size = 128;
  uint64_t seed = 0;
  long log_interval = 10;
  long checkpoint_interval = 1000;
  bool highres = false;  // optimize through the 2x + convex-downsample path
  // Photometric alignment term on the splat-averaged warped frames. The
  // synthesized-frame loss alone barely constrains the motion: the synthesis
  // network can repaint the frame without motion, and splat holes at the
  // borders reward zero flow. Aligning the raw splat averages with the middle
  // frame at coarse pyramid scales, masked to pixels both splats reach, gives
  // the estimator a direct training signal. Still frames-only supervision.
  double align_weight = 100.0;
  int align_scales = 2;     // coarse pyramid scales used (1/2 and 1/4 by default)
  long align_warmup = 0;    // iterations training the estimator on alignment alone

  void validate() const {
    if (!(lr_start >= lr_end && lr_end > 0)) throw InputError("train config: need lr_start >= lr_end > 0");
    if (iterations < 1) throw InputError("train config: iterations must be >= 1");
    if (batch_size < 1 || crop_size < 16) throw InputError("train config: bad batch/crop size");
  }
};

inline json train_config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},     {"iterations", c.iterations},
          {"lr_start", c.lr_start},         {"lr_end", c.lr_end},
          {"weight_decay", c.weight_decay}, {"beta1", c.beta1},
          {"beta2", c.beta2},               {"adam_eps", c.adam_eps},
          {"grad_clip", c.grad_clip},       {"crop_size", c.crop_size},
          {"highres", c.highres},           {"align_weight", c.align_weight},
          {"align_scales", c.align_scales}, {"align_warmup", c.align_warmup},
          {"seed", c.seed},                 {"log_interval", c.log_interval},
          {"checkpoint_interval", c.checkpoint_interval}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.iterations = j.value("iterations", c.iterations);
  c.lr_start = j.value("lr_start", c.lr_start);
  c.lr_end = j.value("lr_end", c.lr_end);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.crop_size = j.value("crop_size", c.crop_size);
  c.highres = j.value("highres", c.highres);
  c.align_weight = j.value("align_weight", c.align_weight);
  c.align_scales = j.value("align_scales", c.align_scales);
  c.align_warmup = j.value("align_warmup", c.align_warmup);
  c.seed = j.value("seed", c.seed);
  c.log_interval = j.value("log_interval", c.log_interval);
  c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
  c.validate();
  return c;
}

inline double lr_at(long iter, const TrainConfig& cfg) {
  if (iter < 0 || iter > cfg.iterations) throw RangeError("lr_at: iteration out of range");
  double phase = M_PI * static_cast<double>(iter) / static_cast<double>(cfg.iterations);
  return cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + std::cos(phase));
}

// AdamW with decoupled weight decay over a named parameter map.
template <typename T>
struct AdamW {
  TrainConfig cfg;
  std::map<std::string, Tensor<T>> m, v;
  long step_count = 0;

  explicit AdamW(const TrainConfig& cfg_) : cfg(cfg_) {}

  void step(ParamMap<T>& params, double lr) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(cfg.beta1, step_count);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step_count);
    for (auto& [name, var] : params) {
      auto& mm = m.try_emplace(name, Tensor<T>::zeros(var->value.n, var->value.h,
                                                      var->value.w, var->value.c))
                     .first->second;
      auto& vv = v.try_emplace(name, Tensor<T>::zeros(var->value.n, var->value.h,
                                                      var->value.w, var->value.c))
                     .first->second;
      auto& g = var->grad.data;
      mm.data = T(cfg.beta1) * mm.data + T(1 - cfg.beta1) * g;
      vv.data = T(cfg.beta2) * vv.data + T(1 - cfg.beta2) * g.square();
      auto mhat = mm.data / T(bc1);
      auto vhat = vv.data / T(bc2);
      var->value.data -= T(lr) * (mhat / (vhat.sqrt() + T(cfg.adam_eps)) +
                                  T(cfg.weight_decay) * var->value.data);
    }
  }
};

template <typename T>
double clip_grad_norm(ParamMap<T>& params, double max_norm) {
  double sq = 0;
  for (auto& [name, var] : params) sq += var->grad.data.template cast<double>().square().sum();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    T scale = static_cast<T>(max_norm / norm);
    for (auto& [name, var] : params) var->grad.data *= scale;
  }
  return norm;
}

template <typename T>
using TripletSampler = std::function<Triplet<T>(std::mt19937&)>;

namespace detail {

template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items) {
  const auto& f = items.front();
  Tensor<T> out(static_cast<int>(items.size()), f.h, f.w, f.c);
  Eigen::Index per = f.size();
  for (size_t i = 0; i < items.size(); ++i) {
    if (!items[i].same_shape(f)) throw DimensionError("batch: mixed triplet shapes");
    out.data.segment(static_cast<Eigen::Index>(i) * per, per) = items[i].data;
  }
  return out;
}

}  // namespace detail

struct TrainResult {
  long final_iteration = 0;
  double final_loss = 0;
};

// Charbonnier distance between the middle frame and the average of both
// frames splatted halfway by the current motion, at coarse pyramid scales.
// Pixels either splat fails to reach are masked out so border holes do not
// reward zero motion; each scale is normalized by its valid fraction.
template <typename T>
Var<T> alignment_loss(const Tensor<T>& i0, const Tensor<T>& i1, const Tensor<T>& gt,
                      const Var<T>& motion, int scales, const LossConfig& loss_cfg) {
  auto p0 = build_image_pyramid(i0, scales + 1);
  auto p1 = build_image_pyramid(i1, scales + 1);
  auto pt = build_image_pyramid(gt, scales + 1);
  Var<T> total;
  for (int s = 1; s <= scales; ++s) {
    auto ms = resize_flow_to(motion, p0[s].h, p0[s].w);
    auto f0t = scale(slice_channels(ms, 0, 2), T(0.5));
    auto f1t = scale(slice_channels(ms, 2, 2), T(0.5));
    auto s0 = forward_warp_average(p0[s], f0t->value);
    auto s1 = forward_warp_average(p1[s], f1t->value);
    Tensor<T> mask(p0[s].n, p0[s].h, p0[s].w, 1);
    for (Eigen::Index k = 0; k < mask.size(); ++k) {
      mask.data[k] = (s0.weight.data[k] > T(0.25) && s1.weight.data[k] > T(0.25)) ? T(1) : T(0);
    }
    double frac = std::max(static_cast<double>(mask.data.mean()), 0.05);
    auto w0 = forward_warp_average(leaf(p0[s]), f0t);
    auto w1 = forward_warp_average(leaf(p1[s]), f1t);
    auto pred = scale(add(w0, w1), T(0.5));
    auto mv = leaf(std::move(mask));
    auto term = charbonnier(mul_map(pred, mv), mul_map(leaf(pt[s]), mv), loss_cfg);
    term = scale(term, static_cast<T>(1.0 / (frac * scales)));
    total = total ? add(total, term) : term;
  }
  return total;
}

// Joint optimization of estimator + synthesis against the middle frame; no
// flow supervision. Emits checkpoints and a CSV metrics log under out_dir.
template <typename T>
TrainResult train(EbmeModel<T>& model, const TrainConfig& cfg, TripletSampler<T> sampler,
                  const std::string& out_dir, const std::string& resume_from = "") {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto params = model.params(true);
  AdamW<T> opt(cfg);
  long start_iter = 0;

  if (!resume_from.empty()) {
    auto ckpt = load_checkpoint<T>(resume_from);
    for (auto& [name, var] : params) {
      auto it = ckpt.tensors.find(name);
      if (it == ckpt.tensors.end()) throw InputError("resume: missing tensor " + name);
      var->value = it->second;
      auto mit = ckpt.tensors.find("extra.opt_m." + name);
      auto vit = ckpt.tensors.find("extra.opt_v." + name);
      if (mit != ckpt.tensors.end()) opt.m[name] = mit->second;
      if (vit != ckpt.tensors.end()) opt.v[name] = vit->second;
    }
    start_iter = ckpt.iteration;
    opt.step_count = start_iter;
  }

  auto save = [&](const std::string& name, long iter) {
    std::map<std::string, Tensor<T>> extra;
    for (auto& [pname, t] : opt.m) extra["opt_m." + pname] = t;
    for (auto& [pname, t] : opt.v) extra["opt_v." + pname] = t;
    save_checkpoint(out_dir + "/" + name, model.cfg, params, iter, extra);
  };

  std::ofstream log(out_dir + "/metrics.csv",
                    start_iter > 0 ? std::ios::app : std::ios::out);
  if (start_iter == 0) log << "iter,loss,lr,psnr\n";

  // Mixing the start iteration keeps resumed runs deterministic too.
  std::mt19937 rng(static_cast<uint32_t>((cfg.seed ^ 0xda3e39cb) + 0x85ebca6bu * start_iter));
  LossConfig loss_cfg;
  TrainResult result;

  for (long iter = start_iter; iter < cfg.iterations; ++iter) {
    std::vector<Tensor<T>> b0, bt, b1;
    for (int i = 0; i < cfg.batch_size; ++i) {
      auto raw = sampler(rng);
      auto tr = augment(raw, cfg.crop_size, rng);
      b0.push_back(std::move(tr.frame0));
      bt.push_back(std::move(tr.frame_t));
      b1.push_back(std::move(tr.frame1));
    }
    Tensor<T> i0 = detail::stack_batch(b0);
    Tensor<T> gt = detail::stack_batch(bt);
    Tensor<T> i1 = detail::stack_batch(b1);

    double lr = lr_at(iter, cfg);
    auto motion = model.estimator.estimate_var(i0, i1, model.cfg.estimator.levels_train);
    const bool warmup = iter < cfg.align_warmup;
    Var<T> frame;  // synthesized frame, skipped during estimator warmup
    Var<T> loss;
    if (!warmup) {
      auto out = cfg.highres ? model.synthesize_highres_var(i0, i1, motion, T(0.5))
                             : model.synthesize_base_var(i0, i1, motion, T(0.5));
      frame = out.frame;
      loss = total_loss(frame, leaf(gt), loss_cfg);
    }
    if (cfg.align_weight > 0 || warmup) {
      auto align = alignment_loss(i0, i1, gt, motion, cfg.align_scales, loss_cfg);
      loss = loss ? add(loss, scale(align, static_cast<T>(cfg.align_weight))) : align;
    }
    double loss_val = static_cast<double>(loss->value.data[0]);

    if (!std::isfinite(loss_val)) {
      fs::create_directories(out_dir + "/nan_batch");
      for (int i = 0; i < cfg.batch_size; ++i) {
        auto slice = [&](const Tensor<T>& b) {
          Tensor<T> one(1, b.h, b.w, b.c);
          one.data = b.data.segment(static_cast<Eigen::Index>(i) * one.size(), one.size());
          return one.template cast<float>();
        };
        std::string p = out_dir + "/nan_batch/sample" + std::to_string(i);
        write_png(p + "_im0.png", slice(i0));
        write_png(p + "_gt.png", slice(gt));
        write_png(p + "_im1.png", slice(i1));
      }
      throw NumericError("train: non-finite loss at iteration " + std::to_string(iter) +
                         "; offending batch dumped to " + out_dir + "/nan_batch");
    }

    for (auto& [name, var] : params) {
      var->ensure_grad();
      var->zero_grad();
    }
    backward(loss);
    clip_grad_norm(params, cfg.grad_clip);
    opt.step(params, lr);

    result.final_iteration = iter + 1;
    result.final_loss = loss_val;
    if (iter % cfg.log_interval == 0 || iter + 1 == cfg.iterations) {
      double p = frame ? psnr(EbmeModel<T>::clamp01(frame->value), gt) : 0.0;
      log << iter << ',' << loss_val << ',' << lr << ',' << p << '\n';
      log.flush();
    }
    if ((iter + 1) % cfg.checkpoint_interval == 0 && iter + 1 < cfg.iterations) {
      save("checkpoint.ebme", iter + 1);
    }
  }
  save("checkpoint.ebme", cfg.iterations);
  return result;
}

}  // namespace ebme
