#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ebme/checkpoint.hpp>
#include <ebme/data.hpp>
#include <ebme/flo_io.hpp>
#include <ebme/warp.hpp>
#include <filesystem>

using namespace ebme;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("ebme_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Mean alignment error between warp(frame0, t*flow01) and frame_t, measured
// on interior pixels whose whole flow neighborhood is constant (i.e. away
// from object edges and occlusion bands).
double interior_consistency(const Triplet<float>& tr, int r) {
  Tensor<float> scaled = tr.gt_flow01;
  scaled.data *= tr.t;
  auto warped = forward_warp_average(tr.frame0, scaled);
  double diff = 0;
  long count = 0;
  for (int y = r; y < tr.frame0.h - r; ++y)
    for (int x = r; x < tr.frame0.w - r; ++x) {
      float u = tr.gt_flow01(0, y, x, 0), v = tr.gt_flow01(0, y, x, 1);
      bool interior = true;
      for (int dy = -r; dy <= r && interior; ++dy)
        for (int dx = -r; dx <= r && interior; ++dx)
          interior = tr.gt_flow01(0, y + dy, x + dx, 0) == u &&
                     tr.gt_flow01(0, y + dy, x + dx, 1) == v;
      if (!interior) continue;
      for (int c = 0; c < 3; ++c) {
        diff += std::abs(warped.warped(0, y, x, c) - tr.frame_t(0, y, x, c));
        ++count;
      }
    }
  REQUIRE(count > 0);
  return diff / count;
}

SyntheticSceneSpec small_spec() {
  SyntheticSceneSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.num_objects = 2;
  spec.min_object_size = 12;
  spec.max_object_size = 24;
  spec.max_displacement = 6.0;
  return spec;
}

}  // namespace

TEST_CASE("synthetic triplet: deterministic given spec and seed") {
  auto spec = small_spec();
  auto a = generate_synthetic_triplet(spec, 7);
  auto b = generate_synthetic_triplet(spec, 7);
  CHECK((a.frame0.data == b.frame0.data).all());
  CHECK((a.frame_t.data == b.frame_t.data).all());
  CHECK((a.frame1.data == b.frame1.data).all());
  CHECK((a.gt_flow01.data == b.gt_flow01.data).all());
  auto c = generate_synthetic_triplet(spec, 8);
  CHECK_FALSE((a.frame0.data == c.frame0.data).all());
}

TEST_CASE("synthetic triplet: zero displacement gives identical frames and zero flow") {
  auto spec = small_spec();
  spec.max_displacement = 0.0;
  auto tr = generate_synthetic_triplet(spec, 3);
  CHECK((tr.frame0.data == tr.frame_t.data).all());
  CHECK((tr.frame0.data == tr.frame1.data).all());
  CHECK(tr.gt_flow01.data.abs().maxCoeff() == 0.f);
  CHECK(tr.gt_flow10.data.abs().maxCoeff() == 0.f);
}

TEST_CASE("synthetic triplet: flows are exact for a single translating object") {
  SyntheticSceneSpec spec = small_spec();
  spec.num_objects = 1;
  auto tr = generate_synthetic_triplet(spec, 11);
  // Flow field must take exactly two values: object displacement and zero.
  float umax = tr.gt_flow01.data.abs().maxCoeff();
  CHECK(umax <= spec.max_displacement + 1e-5);
  // gt_flow10 on the object support equals -gt_flow01 shifted; check the
  // two-sided consistency instead: displaced object flow magnitudes agree.
  CHECK(tr.gt_flow10.data.abs().maxCoeff() == doctest::Approx(umax));
}

TEST_CASE("synthetic triplet: forward warp by t*flow aligns with the middle frame") {
  auto spec = small_spec();
  for (uint64_t seed : {1, 2, 3}) {
    auto tr = generate_synthetic_triplet(spec, seed);
    CHECK(interior_consistency(tr, 5) < 0.02);
  }
}

TEST_CASE("synthetic triplet: rotation flows compose to identity") {
  auto spec = small_spec();
  spec.num_objects = 1;
  spec.max_rotation = 0.3;
  spec.max_displacement = 4.0;
  auto tr = generate_synthetic_triplet(spec, 21);
  // Following flow01 from time 0 and then flow10 back must return to the
  // start. Sample flow10 bilinearly at the displaced position.
  long checked = 0;
  for (int y = 2; y < 62; ++y)
    for (int x = 2; x < 62; ++x) {
      float u = tr.gt_flow01(0, y, x, 0), v = tr.gt_flow01(0, y, x, 1);
      if (u == 0.f && v == 0.f) continue;  // background (static here)
      double qx = x + u, qy = y + v;
      int ix = static_cast<int>(std::floor(qx)), iy = static_cast<int>(std::floor(qy));
      if (ix < 0 || iy < 0 || ix + 1 >= 64 || iy + 1 >= 64) continue;
      double fx = qx - ix, fy = qy - iy;
      auto sample = [&](int c) {
        return (1 - fy) * ((1 - fx) * tr.gt_flow10(0, iy, ix, c) +
                           fx * tr.gt_flow10(0, iy, ix + 1, c)) +
               fy * ((1 - fx) * tr.gt_flow10(0, iy + 1, ix, c) +
                     fx * tr.gt_flow10(0, iy + 1, ix + 1, c));
      };
      // Skip samples straddling the object boundary (mixed flow values).
      bool interior = true;
      for (int dy = 0; dy <= 1 && interior; ++dy)
        for (int dx = 0; dx <= 1 && interior; ++dx)
          interior = tr.gt_flow10(0, iy + dy, ix + dx, 0) != 0.f ||
                     tr.gt_flow10(0, iy + dy, ix + dx, 1) != 0.f;
      if (!interior) continue;
      CHECK(std::abs(qx + sample(0) - x) < 0.05);
      CHECK(std::abs(qy + sample(1) - y) < 0.05);
      ++checked;
    }
  CHECK(checked > 100);
}

TEST_CASE("synthetic triplet: oversized object rejected") {
  auto spec = small_spec();
  spec.max_object_size = 100;
  CHECK_THROWS_AS(generate_synthetic_triplet(spec, 0), InputError);
}

TEST_CASE("scene spec JSON round trip") {
  auto spec = small_spec();
  spec.background_dx = 1.5;
  spec.texture_seed = 99;
  auto back = scene_spec_from_json(scene_spec_to_json(spec));
  CHECK(back.height == spec.height);
  CHECK(back.max_displacement == spec.max_displacement);
  CHECK(back.background_dx == spec.background_dx);
  CHECK(back.texture_seed == spec.texture_seed);
}

TEST_CASE("augment: temporal reversal is an involution") {
  auto tr = generate_synthetic_triplet(small_spec(), 5);
  auto twice = reverse_time(reverse_time(tr));
  CHECK((twice.frame0.data == tr.frame0.data).all());
  CHECK((twice.gt_flow01.data == tr.gt_flow01.data).all());
  CHECK(twice.t == tr.t);
}

TEST_CASE("augment: flow transforms stay consistent with the frames") {
  auto spec = small_spec();
  std::mt19937 rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    auto tr = generate_synthetic_triplet(spec, 100 + trial);
    auto aug = augment(tr, 48, rng);
    CHECK(aug.frame0.h == 48);
    CHECK(aug.frame0.w == 48);
    CHECK(interior_consistency(aug, 5) < 0.02);
  }
}

TEST_CASE("augment: crop smaller than frame is required") {
  auto tr = generate_synthetic_triplet(small_spec(), 1);
  std::mt19937 rng(1);
  CHECK_THROWS_AS(augment(tr, 128, rng), RangeError);
}

TEST_CASE("png round trip preserves 8-bit data") {
  auto dir = temp_dir("png");
  std::mt19937 rng(2);
  Tensor<float> img(1, 20, 30, 3);
  fill_uniform(img, rng, 0.f, 1.f);
  // Snap to the 8-bit grid so the round trip is exact.
  for (Eigen::Index i = 0; i < img.size(); ++i)
    img.data[i] = std::round(img.data[i] * 255.f) / 255.f;
  write_png((dir / "a.png").string(), img);
  auto back = read_png((dir / "a.png").string());
  REQUIRE(back.same_shape(img));
  CHECK((back.data - img.data).abs().maxCoeff() < 1e-6);
}

TEST_CASE("triplet directory loading and error naming") {
  auto dir = temp_dir("trip");
  Tensor<float> img = Tensor<float>::constant(1, 16, 16, 3, 0.5f);
  write_png((dir / "im1.png").string(), img);
  write_png((dir / "im3.png").string(), img);
  CHECK_THROWS_WITH_AS(load_triplet_dir(dir.string()),
                       doctest::Contains("im2.png"), InputError);
  write_png((dir / "im2.png").string(), img);
  auto tr = load_triplet_dir(dir.string());
  CHECK(tr.frame0.same_shape(tr.frame_t));
  CHECK(tr.t == 0.5f);
  CHECK_FALSE(tr.has_gt_flow);
  // Mismatched size names both offenders.
  write_png((dir / "im2.png").string(), Tensor<float>::constant(1, 8, 16, 3, 0.5f));
  try {
    load_triplet_dir(dir.string());
    FAIL("expected InputError");
  } catch (const InputError& e) {
    std::string msg = e.what();
    CHECK(msg.find("im1.png") != std::string::npos);
    CHECK(msg.find("im2.png") != std::string::npos);
  }
}

TEST_CASE("flo round trip and validation") {
  auto dir = temp_dir("flo");
  std::mt19937 rng(3);
  Tensor<float> flow(1, 12, 17, 2);
  fill_uniform(flow, rng, -20.f, 20.f);
  write_flo((dir / "f.flo").string(), flow);
  auto back = read_flo((dir / "f.flo").string());
  REQUIRE(back.same_shape(flow));
  CHECK((back.data == flow.data).all());
  CHECK_THROWS_AS(write_flo((dir / "bad.flo").string(), Tensor<float>::zeros(1, 4, 4, 3)),
                  DimensionError);
  std::ofstream junk(dir / "junk.flo", std::ios::binary);
  junk << "not a flow";
  junk.close();
  CHECK_THROWS_AS(read_flo((dir / "junk.flo").string()), InputError);
}

TEST_CASE("checkpoint: model parameters and metadata round trip") {
  auto dir = temp_dir("ckpt");
  ModelConfig cfg;
  cfg.estimator.warp_mode = WarpMode::Forward;
  cfg.train_crop = 96;
  EbmeModel<float> model(cfg, 17);
  auto params = model.params(true);
  save_checkpoint((dir / "m.ebme").string(), cfg, params, 123);

  auto ckpt = load_checkpoint<float>((dir / "m.ebme").string());
  CHECK(ckpt.iteration == 123);
  CHECK(ckpt.config.train_crop == 96);
  CHECK(ckpt.config.estimator.warp_mode == WarpMode::Forward);
  auto restored = model_from_checkpoint(ckpt);
  auto rparams = restored.params(true);
  REQUIRE(rparams.size() == params.size());
  for (auto& [name, var] : params) {
    CHECK((rparams.at(name)->value.data == var->value.data).all());
  }
}

TEST_CASE("checkpoint: corrupt files rejected") {
  auto dir = temp_dir("ckpt_bad");
  std::ofstream f(dir / "x.ebme", std::ios::binary);
  f << "garbage data here";
  f.close();
  CHECK_THROWS_AS(load_checkpoint<float>((dir / "x.ebme").string()), InputError);
  CHECK_THROWS_AS(load_checkpoint<float>((dir / "missing.ebme").string()), InputError);
}
