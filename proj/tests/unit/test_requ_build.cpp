#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sobonet/errors.hpp"
#include "sobonet/requ_build.hpp"
#include "sobonet/rng.hpp"
#include "sobonet/subdomain.hpp"

using namespace sobonet;
using namespace sobonet::requ;

namespace {

double monomial_value(std::span<const int> alpha, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) v *= std::pow(x[j], alpha[j]);
  return v;
}

}  // namespace

TEST_CASE("exact square and product") {
  const Network sq = exact_square();
  const double m3[1] = {-3.0};
  CHECK(sq.evaluate(m3) == 9.0);
  CHECK(sq.width() == 2);
  CHECK(sq.depth() == 1);
  const Network p = exact_product();
  const double xy[2] = {2.0, 3.0};
  CHECK(p.evaluate(xy) == 6.0);
  CHECK(p.width() == 4);
  const Derivative dv = p.differentiate(xy, 2);
  CHECK(dv.gradient[0] == 3.0);
  CHECK(dv.hessian[1] == 1.0);
  CHECK(dv.hessian[0] == 0.0);
}

TEST_CASE("exact monomials within budget") {
  const int a32[2] = {3, 2};
  const Network m = build_exact_monomial(a32, 2, 2);
  const double x[2] = {0.5, 2.0};
  CHECK(m.evaluate(x) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.width() <= 4 * 2 + 2 * 2);
  CHECK(m.depth() <= 2 + 1);
  CHECK_THROWS_AS(build_exact_monomial(a32, 1, 1), InvalidInput);

  CounterRng rng(17);
  for (int N = 1; N <= 4; ++N)
    for (int L = 1; L <= 3; ++L) {
      const int fl = N >= 4 ? 2 : (N >= 2 ? 1 : 0);
      const int cap = N * L + (1 << fl);
      for (int deg = 0; deg <= cap; ++deg) {
        const int alpha[3] = {deg / 2, deg - deg / 2 - deg / 3, deg / 3};
        const Network net = build_exact_monomial(alpha, N, L);
        for (int k = 0; k < 200; ++k) {
          const double xs[3] = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
          const double ref = monomial_value(alpha, xs);
          // Rounding in the polarization products scales with the factor magnitudes (up to 2^deg).
          const double tol = deg <= 6 ? 1e-12 * (1 + std::abs(ref)) : 1e-12 * std::ldexp(1.0, deg);
          CHECK(std::abs(net.evaluate(xs) - ref) <= tol);
        }
      }
    }
}

TEST_CASE("exact polynomial") {
  const std::vector<Monomial> terms = {{{2, 0}, 1.5}, {{1, 1}, -2.0}, {{0, 0}, 0.25}};
  const Network p = build_exact_polynomial(terms, 2, 2, 4);
  CounterRng rng(2);
  for (int k = 0; k < 500; ++k) {
    const double x[2] = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double ref = 1.5 * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.25;
    CHECK(std::abs(p.evaluate(x) - ref) <= 1e-12 * (1 + std::abs(ref)));
  }
  CHECK_THROWS_AS(build_exact_polynomial(terms, 2, 1, 1), InvalidInput);
}

TEST_CASE("bump s values and smoothness") {
  CHECK(s_bump(0.5) == 0.5);
  CHECK(s_bump(2.0) == 1.0);
  CHECK(s_bump(0.0) == 0.0);
  CHECK(s_bump(2.75) == 0.125);
  for (double knot : {0.0, 0.5, 1.0, 2.0, 2.5, 3.0}) {
    const double h = 1e-9;
    CHECK(std::abs(s_bump(knot - h) - s_bump(knot + h)) <= 1e-8);
    CHECK(std::abs(ds_bump(knot - h) - ds_bump(knot + h)) <= 1e-8);
  }
  for (double x = -1.0; x <= 4.0; x += 0.001) {
    CHECK(s_bump(x) >= 0.0);
    CHECK(s_bump(x) <= 1.0);
  }
}

TEST_CASE("smooth partition networks match closed forms") {
  for (int d = 1; d <= 2; ++d) {
    const SmoothPartitionKit kit = build_smooth_partition(2, 1, d);
    const int K = kit.shape.K;
    CounterRng rng(40 + d);
    for (int k = 0; k < 2000; ++k) {
      std::vector<double> x(static_cast<std::size_t>(d));
      for (double& v : x) v = rng.uniform();
      double sum = 0.0;
      for (std::size_t c = 0; c < kit.colours.size(); ++c) {
        const auto& m = kit.colours[c];
        const double sm = kit.s_m(m, x);
        sum += sm;
        const Derivative dv = kit.lambda[c].differentiate(x, 2);
        CHECK(std::abs(dv.value - sm) <= 1e-10);
        if (!dv.breakpoint) {
          const auto g = kit.grad_s_m(m, x);
          const auto h = kit.hess_s_m(m, x);
          for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(dv.gradient[i] - g[i]) <= 1e-8 * K);
          for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(dv.hessian[i] - h[i]) <= 1e-8 * K * K);
        }
        if (!in_omega(m, K, x)) CHECK(sm == 0.0);
        for (const double gi : kit.grad_s_m(m, x)) CHECK(std::abs(gi) <= 8.0 * K + 1e-9);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(build_smooth_partition(4, 1, 1), InvalidInput);
}
