#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sobonet/complexity.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/rng.hpp"

using namespace sobonet;

namespace {

Polynomial random_poly(int W, int D, CounterRng& rng) {
  Polynomial p;
  p.d = W;
  p.alphas = multi_indices(W, D);
  for (std::size_t k = 0; k < p.alphas.size(); ++k) p.coeffs.push_back(rng.uniform(-1.0, 1.0));
  return p;
}

}  // namespace

TEST_CASE("warren bound") {
  CHECK(warren_count(1, 1, 1) == doctest::Approx(10.873).epsilon(1e-4));
  CHECK(warren_count(3, 1, 1) == doctest::Approx(32.619).epsilon(1e-4));
  CHECK(warren_count(2, 2, 2) == doctest::Approx(2.0 * 16.0 * std::exp(2.0)));
  CHECK_THROWS_AS(warren_count(1, 1, 2), PreconditionError);
}

TEST_CASE("warren bound dominates enumerated patterns") {
  CounterRng rng(stream_key(3, {0}));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> lines;
    for (int k = 0; k < 3; ++k) lines.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const std::size_t c = affine_pattern_count(lines);
    CHECK(c <= 7);  // 3 knots split the line into at most 7 pieces
    CHECK(static_cast<double>(c) <= warren_count(3, 1, 1));
  }
  for (int M = 1; M <= 3; ++M)
    for (int D = 1; D <= 3; ++D)
      for (int W = 1; W <= M; ++W) {
        std::vector<Polynomial> fam;
        for (int k = 0; k < M; ++k) fam.push_back(random_poly(W, D, rng));
        const std::size_t c = sampled_pattern_count(fam, 20000, 11);
        CHECK(c <= std::size_t{1} << M);
        CHECK(static_cast<double>(c) <= warren_count(M, D, W));
      }
}

TEST_CASE("vc and pdim upper bounds") {
  const BoundReport a = vc_pdim_upper(ArchSpec::parse("1,1,1"));
  CHECK(a.U == 6);
  CHECK(a.vc_upper == doctest::Approx(2.0 + 6.0 * std::log2(12.0 * std::log2(6.0))));
  CHECK(a.vc_upper == doctest::Approx(31.73).epsilon(1e-3));
  CHECK(a.pdim_upper > a.vc_upper);

  const BoundReport b = vc_pdim_upper(ArchSpec::parse("1,2,2,1"));
  CHECK(b.U == 27);
  CHECK(b.vc_upper == doctest::Approx(176.5).epsilon(1e-3));

  const double u64 = static_cast<double>(capacity_u(ArchSpec::parse("1,64,64,1")));
  const double u128 = static_cast<double>(capacity_u(ArchSpec::parse("1,128,128,1")));
  CHECK(u128 / u64 >= 3.5);
  CHECK(u128 / u64 <= 4.1);
  CHECK_THROWS_AS(ArchSpec::parse("1,0,1"), InvalidInput);
  CHECK_THROWS_AS(ArchSpec::parse("1,2,3"), InvalidInput);
}

TEST_CASE("shattering derivative signs") {
  const ArchSpec arch = ArchSpec::parse("1,1,1");
  const std::vector<std::vector<double>> pts{{0.25}, {0.75}};
  const ShatterInstance s = shatter_search(arch, pts, 0, {});
  CHECK(s.shattered);
  CHECK(s.patterns_found == 4);
  CHECK(s.samples_used <= 100000);

  const std::vector<std::vector<double>> one{{0.4}};
  CHECK(shatter_search(ArchSpec::parse("1,3,1"), one, 0, {}).shattered);

  ShatterConfig grid;
  grid.sampler = ThetaSampler::grid;
  CHECK(shatter_search(arch, pts, 0, grid).shattered);

  // Determinism and monotonicity in the sample count.
  const ArchSpec wide = ArchSpec::parse("2,3,3,1");
  const auto pts5 = default_points(2, 5, 1);
  std::size_t prev = 0;
  for (std::size_t n : {10u, 100u, 1000u, 5000u}) {
    ShatterConfig c;
    c.samples = n;
    const ShatterInstance r = shatter_search(wide, pts5, 1, c);
    CHECK(r.patterns_found >= prev);
    CHECK(r.patterns_found <= 32);
    CHECK(r.shattered == (r.patterns_found == 32));
    prev = r.patterns_found;
    set_thread_count(3);
    CHECK(shatter_search(wide, pts5, 1, c).patterns_found == r.patterns_found);
    set_thread_count(1);
  }
}

TEST_CASE("shattered sizes stay below the vc bound") {
  ShatterConfig c;
  c.samples = 20000;
  for (const char* a : {"1,1,1", "1,2,1", "1,3,1"}) {
    const ArchSpec arch = ArchSpec::parse(a);
    const std::size_t best = best_shattered(arch, 6, 0, c);
    CHECK(best >= 1);
    CHECK(static_cast<double>(best) <= vc_pdim_upper(arch).vc_upper);
  }
}

TEST_CASE("bump grid") {
  const int M = 5, d = 2, n = 2;
  std::vector<int> beta(M * M);
  CounterRng rng(stream_key(5, {0}));
  for (int& b : beta) b = (rng.next() & 1) ? 1 : -1;
  const BumpGrid g = bump_grid(M, d, n, beta);
  const int e0[2] = {1, 0};
  for (std::size_t t = 0; t < g.centres(); ++t) {
    const auto c = g.centre(t);
    const double v = g.derivative(e0, c);
    CHECK((v > 0 ? 1 : -1) == beta[t]);
  }
  // Outside every support ball.
  const double corner[2] = {0.0, 0.0};
  CHECK(g.value(corner) == 0.0);
  const double edge[2] = {0.2, 0.5};
  CHECK(g.value(edge) == 0.0);

  double worst = 0.0;
  const auto alphas = multi_indices(d, n);
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 300; ++j) {
      const double x[2] = {(i + 0.37) / 300.0, (j + 0.61) / 300.0};
      for (const auto& a : alphas) worst = std::max(worst, std::abs(g.derivative(a, x)));
    }
  CHECK(worst <= 1.0);
  CHECK(worst > 0.0);

  // Flipping one sign changes exactly that centre.
  std::vector<int> flipped = beta;
  flipped[7] = -flipped[7];
  const BumpGrid h = bump_grid(M, d, n, flipped);
  for (std::size_t t = 0; t < g.centres(); ++t) {
    const auto c = g.centre(t);
    const bool same = (g.derivative(e0, c) > 0) == (h.derivative(e0, c) > 0);
    CHECK(same == (t != 7));
  }
  CHECK_THROWS_AS(bump_grid(2, 1, 1, std::vector<int>{1}), InvalidInput);
}

TEST_CASE("generalization bound") {
  CHECK(rademacher_term(100, 1, 1e4) == doctest::Approx(2.8 * std::sqrt(std::log(2 * std::numbers::e * 100))));
  CHECK(rademacher_term(100, 1, 1e4) == doctest::Approx(7.03).epsilon(2e-3));
  CHECK(gen_bound(100, 200, 0.0, 1, 1e4).gap == 0.0);
  double prev = INFINITY;
  for (double M = 1e3; M <= 1e6; M *= 3) {
    const double g = gen_bound(100, 300, 1.0, 2, M).gap;
    CHECK(g < prev);
    prev = g;
  }
  CHECK(rademacher_term(100, 1, 1e4, LogBase::two) > rademacher_term(100, 1, 1e4));
  CHECK_THROWS_AS(gen_bound(100, 300, 1.0, 1, 200), PreconditionError);
}
