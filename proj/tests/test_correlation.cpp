#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ebme/correlation.hpp"
#include "gradcheck.hpp"

using namespace ebme;
using ebme::testing::gradcheck;

namespace {

Tensor<double> randt(int n, int h, int w, int c, std::mt19937& rng) {
  Tensor<double> t(n, h, w, c);
  fill_uniform(t, rng, -1.0, 1.0);
  return t;
}

// Triple-loop oracle over positions, displacements and channels.
Tensor<double> corr_oracle(const Tensor<double>& fa, const Tensor<double>& fb, int r) {
  const int side = 2 * r + 1;
  Tensor<double> out(fa.n, fa.h, fa.w, side * side);
  for (int s = 0; s < fa.n; ++s)
    for (int y = 0; y < fa.h; ++y)
      for (int x = 0; x < fa.w; ++x)
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= fa.h || xx < 0 || xx >= fa.w) continue;
            double acc = 0;
            for (int ci = 0; ci < fa.c; ++ci) acc += fa(s, y, x, ci) * fb(s, yy, xx, ci);
            out(s, y, x, (dy + r) * side + (dx + r)) = acc / fa.c;
          }
  return out;
}

}  // namespace

TEST_CASE("radius 4 produces 81 displacement channels") {
  std::mt19937 rng(1);
  auto fa = randt(1, 6, 6, 4, rng);
  auto corr = local_correlation(fa, fa, 4);
  CHECK(corr.c == 81);
}

TEST_CASE("constant features: every interior channel equals |v|^2 / C") {
  const int c = 5;
  Tensor<double> f(1, 8, 8, c);
  double norm2 = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) f(0, y, x, ci) = 0.3 * (ci + 1);
    norm2 += 0.3 * (ci + 1) * 0.3 * (ci + 1);
  }
  auto corr = local_correlation(f, f, 2);
  const double expect = norm2 / c;
  // interior pixel: all displacements in range
  for (int d = 0; d < 25; ++d) CHECK(corr(0, 4, 4, d) == doctest::Approx(expect));
  // max over d attained at d=(0,0) (non-strictly)
  CHECK(corr(0, 4, 4, 12) == doctest::Approx(expect));
}

TEST_CASE("matches the brute-force oracle on random instances") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    auto fa = randt(1, 6, 6, 4, rng);
    auto fb = randt(1, 6, 6, 4, rng);
    auto got = local_correlation(fa, fb, 2);
    auto want = corr_oracle(fa, fb, 2);
    CHECK((got.data - want.data).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("swap symmetry: corr(A,B)(p,d) = corr(B,A)(p+d,-d)") {
  std::mt19937 rng(67);
  auto fa = randt(1, 7, 7, 3, rng);
  auto fb = randt(1, 7, 7, 3, rng);
  const int r = 2, side = 2 * r + 1;
  auto ab = local_correlation(fa, fb, r);
  auto ba = local_correlation(fb, fa, r);
  for (int y = r; y < 7 - r; ++y)
    for (int x = r; x < 7 - r; ++x)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double lhs = ab(0, y, x, (dy + r) * side + (dx + r));
          const double rhs = ba(0, y + dy, x + dx, (-dy + r) * side + (-dx + r));
          CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
}

TEST_CASE("out-of-bounds displacements contribute zero") {
  std::mt19937 rng(71);
  auto fa = randt(1, 4, 4, 2, rng);
  auto corr = local_correlation(fa, fa, 2);
  // corner pixel (0,0): displacement (-2,-2) is off-map
  CHECK(corr(0, 0, 0, 0) == 0.0);
}

TEST_CASE("shape mismatch rejected") {
  std::mt19937 rng(2);
  auto fa = randt(1, 4, 4, 2, rng);
  auto fb = randt(1, 4, 5, 2, rng);
  CHECK_THROWS_AS(local_correlation(fa, fb, 2), DimensionError);
  CHECK_THROWS_AS(local_correlation(fa, fa, -1), RangeError);
}

TEST_CASE("gradients w.r.t. both feature maps match finite differences") {
  std::mt19937 rng(73);
  auto fa = randt(1, 6, 6, 4, rng);
  auto fb = randt(1, 6, 6, 4, rng);
  auto fn = [](const std::vector<Var<double>>& in) {
    return mean_all(square(local_correlation(in[0], in[1], 2)));
  };
  CHECK(gradcheck(fn, {fa, fb}, 0) < 1e-3);
  CHECK(gradcheck(fn, {fa, fb}, 1) < 1e-3);
}
