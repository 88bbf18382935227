#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sobonet/assemble.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/rng.hpp"
#include "sobonet/subdomain.hpp"

using namespace sobonet;

namespace {

AssembleOptions quiet(std::optional<int> K = {}) {
  AssembleOptions o;
  o.measure = false;
  o.K_override = K;
  return o;
}

std::vector<std::vector<double>> random_points(int d, int count, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, {static_cast<std::uint64_t>(d)}));
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(count), std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& p : pts)
    for (double& v : p) v = rng.uniform();
  return pts;
}

double monomial(const MultiIndex& alpha, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) v *= std::pow(x[j], alpha[j]);
  return v;
}

}  // namespace

TEST_CASE("budget formulas") {
  CHECK(relu_final_formula(2, 1, 1, 1).width == doctest::Approx(1680.0));
  CHECK(relu_final_formula(2, 1, 1, 1).depth == doctest::Approx(56.0 * 4 * 2 * 2));
  CHECK(relu_local_formula(2, 1, 1, 1).width == doctest::Approx(25.0 * 4 * 2 * 3));
  CHECK(requ_final_formula(4, 2, 1, 1).width == doctest::Approx(128.0 * 16 * 3 * 4));
  CHECK(requ_local_formula(4, 2, 1, 1).depth == doctest::Approx(11.0 * 16 * 3 * 2));
}

TEST_CASE("relu approximant structure") {
  const auto f = make_target("sin1d", 2);
  const Assembly a = build_relu_approximant(f, 2, 2, 1, 1, quiet());
  CHECK(a.report.K == 4);
  CHECK(a.report.final_budget.width == a.net.width());
  CHECK(a.report.final_budget.depth == a.net.depth());
  CHECK(a.net.input_dim() == 1);
  CHECK(a.net.output_dim() == 1);
  CHECK(a.terms.size() == 2);
  CHECK(a.report.outer_bound >= 1.0);
  CHECK(to_json(a.report).at("K") == 4);

  for (const auto& x : random_points(1, 1000, 1))
    CHECK(std::abs(a.net.evaluate(x) - evaluate_terms(a, x)) <= 1e-10);
}

TEST_CASE("relu summands vanish off their subdomain") {
  const auto f = make_target("cos1d", 2);
  const Assembly a = build_relu_approximant(f, 2, 2, 1, 1, quiet());
  int checked = 0;
  for (const auto& x : random_points(1, 2000, 2))
    for (const auto& t : a.terms) {
      if (in_omega(t.m, a.report.K, x)) continue;
      const Derivative dv = t.summand.differentiate(x, 1);
      if (dv.breakpoint) continue;
      CHECK(std::abs(dv.value) <= 1e-12);
      CHECK(std::abs(dv.gradient[0]) <= 1e-12);
      ++checked;
    }
  CHECK(checked > 500);
}

TEST_CASE("relu error shrinks with K") {
  const auto f = make_target("sin1d", 2);
  double prev = INFINITY;
  for (int N : {1, 2, 4}) {
    const Assembly a = build_relu_approximant(f, 2, N, 1, 1);
    REQUIRE(a.report.error.has_value());
    CHECK(a.report.error->sobolev() <= prev);
    prev = a.report.error->sobolev();
  }
}

TEST_CASE("relu approximant in two dimensions") {
  const auto f = make_target("sinprod", 2, 2);
  AssembleOptions o = quiet();
  const Assembly a = build_relu_approximant(f, 2, 1, 1, 2, o);
  CHECK(a.terms.size() == 4);
  for (const auto& x : random_points(2, 100, 3)) CHECK(std::abs(a.net.evaluate(x) - evaluate_terms(a, x)) <= 1e-10);
  o.measure = true;
  o.grid = GridSpec{2, 40, 0.5, {}};
  const Assembly b = build_relu_approximant(f, 2, 4, 1, 2, o);
  CHECK(b.report.K == 4);
  CHECK(b.report.error->sobolev() < 1.0);
}

TEST_CASE("requ approximant") {
  const auto f = make_target("sin1d", 4);
  const Assembly a = build_requ_approximant(f, 4, 2, 1, 1, quiet(8));
  CHECK(a.report.K == 8);
  CHECK(a.report.K_overridden);
  const double mid[1] = {0.3};
  CHECK(a.net.differentiate(mid, 2).hessian.size() == 1);

  const double C = a.report.coefficient_scale;
  for (const auto& x : random_points(1, 1000, 4)) {
    const double v = a.net.evaluate(x);
    CHECK(std::abs(v - evaluate_terms(a, x)) <= 1e-10);
    // Closed-form products and monomials in place of the sub-networks.
    double closed = 0.0;
    for (const auto& t : a.terms) {
      const double p[1] = {t.index.evaluate(x)};
      double local = 0.0;
      for (std::size_t k = 0; k < a.alphas.size(); ++k)
        local += (2.0 * C * t.lookups[k].evaluate(p) - C) * monomial(a.alphas[k], x);
      closed += t.partition.evaluate(x) * local;
    }
    CHECK(std::abs(v - closed) <= 1e-10);
  }

  int off = 0;
  for (const auto& x : random_points(1, 2000, 5))
    for (const auto& t : a.terms) {
      if (t.partition.evaluate(x) != 0.0) continue;
      CHECK(t.summand.evaluate(x) == 0.0);
      ++off;
    }
  CHECK(off > 100);
}

TEST_CASE("requ error shrinks with K") {
  const auto f = make_target("cos1d", 4);
  double prev = INFINITY;
  for (int K : {4, 8, 16}) {
    AssembleOptions o;
    o.K_override = K;
    const Assembly a = build_requ_approximant(f, 4, 2, 1, 1, o);
    CHECK(a.report.error->at(2) <= prev);
    prev = a.report.error->at(2);
  }
}

TEST_CASE("assembly preconditions") {
  CHECK_THROWS_AS(build_requ_approximant(make_target("sin1d", 4), 4, 1, 1, 1, quiet()), InvalidInput);
  CHECK_THROWS_AS(build_relu_approximant(make_target("sin1d", 2), 1, 1, 1, 1, quiet()), InvalidInput);
  CHECK_THROWS_AS(build_relu_approximant(make_target("sin1d", 2), 2, 1, 1, 2, quiet()), InvalidInput);
}
