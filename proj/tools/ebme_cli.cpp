#include <CLI11.hpp>
#include <ebme/checkpoint.hpp>
#include <ebme/evaluation.hpp>
#include <ebme/flo_io.hpp>
#include <ebme/trainer.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ebme;

namespace {

constexpr int kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4;

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw InputError("invalid JSON in " + path);
  return j;
}

int auto_levels(const LoadedCheckpoint<float>& ckpt, const Tensor<float>& frame) {
  double ratio = static_cast<double>(std::max(frame.w, frame.h)) /
                 static_cast<double>(ckpt.config.train_crop);
  return compute_test_levels(ckpt.config.estimator.levels_train, std::max(1.0, ratio));
}

std::vector<fs::path> list_triplet_dirs(const std::string& root) {
  std::vector<fs::path> dirs;
  if (fs::exists(fs::path(root) / "im1.png")) {
    dirs.push_back(root);
    return dirs;
  }
  if (!fs::is_directory(root)) throw InputError("dataset root not found: " + root);
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "im1.png")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

TripletSampler<float> make_sampler(const std::string& data) {
  if (fs::is_regular_file(data)) {
    auto spec = scene_spec_from_json(read_json_file(data));
    return [spec](std::mt19937& rng) { return generate_synthetic_triplet(spec, rng()); };
  }
  auto dirs = list_triplet_dirs(data);
  if (dirs.empty()) throw InputError("no triplets found under " + data);
  return [dirs](std::mt19937& rng) {
    std::uniform_int_distribution<size_t> pick(0, dirs.size() - 1);
    return load_triplet_dir(dirs[pick(rng)].string());
  };
}

struct InterpolateArgs {
  std::string checkpoint, frame0, frame1, out_dir = ".";
  double t = 0.5;
  int multi = 0;
  int levels = 0;  // 0 = auto via the test-level rule
  bool highres = false, tta = false;
};

int cmd_interpolate(const InterpolateArgs& a) {
  auto ckpt = load_checkpoint<float>(a.checkpoint);
  auto model = model_from_checkpoint(ckpt);
  auto i0 = read_png(a.frame0);
  auto i1 = read_png(a.frame1);
  if (!i0.same_shape(i1)) {
    throw InputError("frame size mismatch: " + i0.shape_str() + " vs " + i1.shape_str());
  }
  int levels = a.levels > 0 ? a.levels : auto_levels(ckpt, i0);
  std::cout << "levels: " << levels << "\n";
  fs::create_directories(a.out_dir);

  auto predict_multi = [&](int k) {
    auto frames = interpolate_multi(model, i0, i1, k, levels, a.highres);
    if (a.tta) {
      auto f0 = ebme::detail::flip_hv_image(i0);
      auto f1 = ebme::detail::flip_hv_image(i1);
      auto flipped = interpolate_multi(model, f0, f1, k, levels, a.highres);
      for (size_t j = 0; j < frames.size(); ++j) {
        frames[j].data =
            0.5f * (frames[j].data + ebme::detail::flip_hv_image(flipped[j]).data);
      }
    }
    return frames;
  };

  if (a.multi >= 2) {
    auto frames = predict_multi(a.multi);
    for (size_t j = 0; j < frames.size(); ++j) {
      std::string name = a.out_dir + "/frame_" + std::to_string(j + 1) + ".png";
      write_png(name, frames[j]);
      std::cout << "wrote " << name << " (t=" << (j + 1) << "/" << a.multi << ")\n";
    }
  } else {
    if (!(a.t > 0 && a.t < 1)) throw InputError("--t must be in (0,1)");
    float t = static_cast<float>(a.t);
    Tensor<float> frame = a.tta ? interpolate_tta(model, i0, i1, t, levels, a.highres)
                                : model.interpolate(i0, i1, t, levels, a.highres);
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%.3f.png", a.t);
    std::string name = a.out_dir + "/" + buf;
    write_png(name, frame);
    std::cout << "wrote " << name << "\n";
  }
  return kExitOk;
}

struct TrainArgs {
  std::string config, data, out = "train_out", resume;
  long long seed = -1;
};

int cmd_train(const TrainArgs& a) {
  json j = a.config.empty() ? json::object() : read_json_file(a.config);
  TrainConfig tc = train_config_from_json(j);
  if (a.seed >= 0) tc.seed = static_cast<uint64_t>(a.seed);
  ModelConfig mc =
      j.contains("model") ? model_config_from_json(j["model"]) : ModelConfig{};
  mc.train_crop = tc.crop_size;

  EbmeModel<float> model(mc, tc.seed);
  auto sampler = make_sampler(a.data);
  auto result = train(model, tc, sampler, a.out, a.resume);
  std::cout << "trained to iteration " << result.final_iteration
            << ", final loss " << result.final_loss << "\n"
            << "checkpoint: " << a.out << "/checkpoint.ebme\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, data, out_dir;
  int count = 32;  // synthetic validation size
  int levels = 0;
  bool highres = false, tta = false, dump_flow = false;
  long long seed = 1000;
};

int cmd_eval(const EvalArgs& a) {
  auto ckpt = load_checkpoint<float>(a.checkpoint);
  auto model = model_from_checkpoint(ckpt);

  std::vector<Triplet<float>> triplets;
  if (fs::is_regular_file(a.data)) {
    auto spec = scene_spec_from_json(read_json_file(a.data));
    for (int i = 0; i < a.count; ++i)
      triplets.push_back(generate_synthetic_triplet(spec, a.seed + i));
  } else {
    for (const auto& d : list_triplet_dirs(a.data))
      triplets.push_back(load_triplet_dir(d.string()));
  }
  if (triplets.empty()) throw InputError("empty dataset: " + a.data);
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);

  std::vector<double> psnrs, ssims, epes;
  for (size_t i = 0; i < triplets.size(); ++i) {
    const auto& tr = triplets[i];
    int levels = a.levels > 0 ? a.levels : auto_levels(ckpt, tr.frame0);
    Tensor<float> pred =
        a.tta ? interpolate_tta(model, tr.frame0, tr.frame1, tr.t, levels, a.highres)
              : model.interpolate(tr.frame0, tr.frame1, tr.t, levels, a.highres);
    psnrs.push_back(psnr(pred, tr.frame_t));
    ssims.push_back(ssim(pred, tr.frame_t));
    if (tr.has_gt_flow || a.dump_flow) {
      auto bm = model.estimator.estimate(tr.frame0, tr.frame1, levels);
      if (tr.has_gt_flow) {
        epes.push_back(0.5 * (epe(bm.f01, tr.gt_flow01) + epe(bm.f10, tr.gt_flow10)));
      }
      if (a.dump_flow) {
        std::string base = (a.out_dir.empty() ? std::string(".") : a.out_dir) +
                           "/pair" + std::to_string(i);
        write_flo(base + "_f01.flo", bm.f01);
        write_flo(base + "_f10.flo", bm.f10);
      }
    }
  }

  auto stats = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double median = v.size() % 2 ? v[v.size() / 2]
                                 : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    return std::pair(mean, median);
  };
  auto [pm, pmed] = stats(psnrs);
  auto [sm, smed] = stats(ssims);
  std::cout << "metric,mean,median\n";
  std::cout << "psnr," << pm << ',' << pmed << '\n';
  std::cout << "ssim," << sm << ',' << smed << '\n';
  json report = {{"count", triplets.size()},
                 {"psnr", {{"mean", pm}, {"median", pmed}}},
                 {"ssim", {{"mean", sm}, {"median", smed}}}};
  if (!epes.empty()) {
    auto [em, emed] = stats(epes);
    std::cout << "epe," << em << ',' << emed << '\n';
    report["epe"] = {{"mean", em}, {"median", emed}};
  }
  if (!a.out_dir.empty()) {
    std::ofstream f(a.out_dir + "/report.json");
    f << report.dump(2) << '\n';
  }
  return kExitOk;
}

struct InfoArgs {
  std::string checkpoint, config;
};

int cmd_info(const InfoArgs& a) {
  ModelConfig mc;
  long iteration = -1;
  if (!a.checkpoint.empty()) {
    auto ckpt = load_checkpoint<float>(a.checkpoint);
    mc = ckpt.config;
    iteration = ckpt.iteration;
  } else if (!a.config.empty()) {
    json j = read_json_file(a.config);
    mc = j.contains("model") ? model_config_from_json(j["model"])
                             : model_config_from_json(j);
  }
  EbmeModel<float> model(mc, 0);
  auto params = model.params(true);
  long total = 0;
  for (auto& [name, var] : params) total += var->value.data.size();
  std::cout << "encoder parameters:   " << param_count(params, "estimator.encoder") << "\n";
  std::cout << "estimator parameters: " << param_count(params, "estimator") << "\n";
  std::cout << "context parameters:   " << param_count(params, "context") << "\n";
  std::cout << "synthesis parameters: " << param_count(params, "synthesis") << "\n";
  std::cout << "total parameters:     " << total << "\n";
  std::cout << "warp mode: " << warp_mode_name(mc.estimator.warp_mode)
            << ", levels_train: " << mc.estimator.levels_train
            << ", train_crop: " << mc.train_crop << "\n";
  if (iteration >= 0) std::cout << "checkpoint iteration: " << iteration << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-directional motion estimation and video frame interpolation"};
  app.require_subcommand(1);

  InterpolateArgs ia;
  auto* interp = app.add_subcommand("interpolate", "Interpolate between two frames");
  interp->add_option("--checkpoint", ia.checkpoint)->required();
  interp->add_option("--frame0", ia.frame0)->required();
  interp->add_option("--frame1", ia.frame1)->required();
  interp->add_option("--t", ia.t, "Timestamp in (0,1)");
  interp->add_option("--multi", ia.multi, "Emit K-1 frames at t=j/K");
  interp->add_option("--levels", ia.levels, "Pyramid levels (0 = auto)");
  interp->add_flag("--highres", ia.highres, "2x synthesis with convex downsampling");
  interp->add_flag("--tta", ia.tta, "Average with a flipped second pass");
  interp->add_option("--out-dir", ia.out_dir);

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", ta.config, "Training config JSON");
  tr->add_option("--data", ta.data, "Triplet root or synthetic scene JSON")->required();
  tr->add_option("--out", ta.out, "Output directory");
  tr->add_option("--resume", ta.resume, "Checkpoint to resume from");
  tr->add_option("--seed", ta.seed, "Override config seed");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ea.checkpoint)->required();
  ev->add_option("--data", ea.data, "Triplet root or synthetic scene JSON")->required();
  ev->add_option("--count", ea.count, "Synthetic validation size");
  ev->add_option("--levels", ea.levels, "Pyramid levels (0 = auto)");
  ev->add_option("--seed", ea.seed, "Synthetic validation seed");
  ev->add_flag("--highres", ea.highres);
  ev->add_flag("--tta", ea.tta);
  ev->add_flag("--dump-flow", ea.dump_flow, "Write estimated .flo files per pair");
  ev->add_option("--out-dir", ea.out_dir);

  InfoArgs fa;
  auto* in = app.add_subcommand("info", "Print parameter counts");
  in->add_option("--checkpoint", fa.checkpoint);
  in->add_option("--config", fa.config);

  try {
    app.parse(argc, argv);
    if (*interp) return cmd_interpolate(ia);
    if (*tr) return cmd_train(ta);
    if (*ev) return cmd_eval(ea);
    if (*in) return cmd_info(fa);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
