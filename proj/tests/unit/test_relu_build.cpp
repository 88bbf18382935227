#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sobonet/errors.hpp"
#include "sobonet/relu_build.hpp"
#include "sobonet/rng.hpp"
#include "sobonet/subdomain.hpp"

using namespace sobonet;
using namespace sobonet::relu;

namespace {

double eval1(const Network& n, double x) {
  const double xs[1] = {x};
  return n.evaluate(xs);
}

double eval2(const Network& n, double x, double y) {
  const double xs[2] = {x, y};
  return n.evaluate(xs);
}

// Hand-written hat composition used as the teeth oracle.
double hat(double x) {
  const double t = std::abs(x);
  return t <= 0.5 ? 2 * t : 2 * (1 - t);
}

}  // namespace

TEST_CASE("teeth values") {
  CHECK(eval1(build_teeth(1), 0.5) == 1.0);
  CHECK(eval1(build_teeth(1), 1.0) == 0.0);
  CHECK(eval1(build_teeth(2), 0.25) == 1.0);
  for (int i = 1; i <= 5; ++i) {
    const Network t = build_teeth(i);
    CHECK(t.depth() == static_cast<std::size_t>(i));
    for (double x = -1.0; x <= 1.0; x += 0.0173) {
      double ref = x;
      for (int k = 0; k < i; ++k) ref = hat(ref);
      CHECK(eval1(t, x) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("square teeth sums") {
  const Network s2 = square_with_teeth(2, 1.0);
  CHECK(eval1(s2, 0.5) == 0.25);
  CHECK(eval1(s2, 0.25) == 0.0625);
  for (int s = 1; s <= 8; ++s) {
    const Network sq = square_with_teeth(s, 1.0);
    CHECK(sq.width() == 4);
    CHECK(sq.depth() == static_cast<std::size_t>(s));
    const int n = 1 << s;
    for (int k = -n; k <= n; ++k) {
      const double x = static_cast<double>(k) / n;
      CHECK(eval1(sq, x) == x * x);
    }
  }
}

TEST_CASE("build_square meets its target") {
  for (int N : {1, 2, 4})
    for (int L : {1, 2}) {
      for (double a : {1.0, 3.0}) {
        const Network sq = build_square(N, L, a);
        CHECK(eval1(sq, 0.0) == 0.0);
        CHECK(square_error(sq, a) <= a * a * std::pow(N, -L));
      }
    }
}

TEST_CASE("product cancels exactly on the axes") {
  const Network p = build_product2(2, 2, 1.0);
  CHECK(eval2(p, 0.0, 0.8) == 0.0);
  CHECK(std::abs(eval2(p, 1.0, 1.0) - 1.0) <= 1.5);
  CounterRng rng(11);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    CHECK(std::abs(eval2(p, x, y) - eval2(p, y, x)) <= 1e-12);
    const double ax[2] = {0.0, y}, ay[2] = {x, 0.0};
    CHECK(p.evaluate(ax) == 0.0);
    CHECK(p.evaluate(ay) == 0.0);
    CHECK(p.differentiate(ax, 1).gradient[1] == 0.0);
    CHECK(p.differentiate(ay, 1).gradient[0] == 0.0);
  }
  for (double a : {1.0, 2.5}) {
    const Network q = build_product2(3, 1, a);
    double err = 0.0;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) {
        const double xs[2] = {a * (-1 + (2 * i + 1) / 64.0), a * (-1 + (2 * j + 1) / 64.0)};
        const Derivative dv = q.differentiate(xs, 1);
        if (dv.breakpoint) continue;
        err = std::max({err, std::abs(dv.value - xs[0] * xs[1]), std::abs(dv.gradient[0] - xs[1]),
                        std::abs(dv.gradient[1] - xs[0])});
      }
    CHECK(err <= 6 * a * a / 3.0);
  }
}

TEST_CASE("multiprod zero propagation and accuracy") {
  CHECK_THROWS_AS(build_multiprod(1, 1, 1), InvalidInput);
  CounterRng rng(5);
  for (int s = 2; s <= 5; ++s) {
    const Network mp = build_multiprod(s, 1, 1);
    for (int zero = 0; zero < s; ++zero)
      for (int r = 0; r < 100; ++r) {
        std::vector<double> x(static_cast<std::size_t>(s));
        for (double& v : x) v = rng.uniform();
        x[static_cast<std::size_t>(zero)] = 0.0;
        const Derivative dv = mp.differentiate(x, 1);
        CHECK(std::abs(dv.value) <= 1e-12);
        for (int j = 0; j < s; ++j)
          if (j != zero) CHECK(std::abs(dv.gradient[static_cast<std::size_t>(j)]) <= 1e-12);
      }
  }
  const Network m3 = build_multiprod(3, 1, 1);
  const std::vector<double> ones = {1.0, 1.0, 1.0};
  CHECK(std::abs(m3.evaluate(ones) - 1.0) <= 10 * 2 * std::pow(2.0, -21));
  double err = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const std::vector<double> x = {rng.uniform(), rng.uniform(), rng.uniform()};
    const Derivative dv = m3.differentiate(x, 1);
    if (dv.breakpoint) continue;
    err = std::max({err, std::abs(dv.value - x[0] * x[1] * x[2]),
                    std::abs(dv.gradient[0] - x[1] * x[2]), std::abs(dv.gradient[1] - x[0] * x[2]),
                    std::abs(dv.gradient[2] - x[0] * x[1])});
  }
  CHECK(err <= 10 * 2 * std::pow(2.0, -21));
}

TEST_CASE("monomials") {
  const int zero[2] = {0, 0};
  const Network c = build_monomial(zero, 1, 1);
  CHECK(eval2(c, 0.3, 0.9) == 1.0);
  const int e1[2] = {1, 0};
  const Network id = build_monomial(e1, 1, 1);
  CHECK(eval2(id, 0.3, 0.9) == 0.3);
  const int a21[2] = {2, 1};
  const Network m = build_monomial(a21, 1, 1, 3);
  CHECK(std::abs(eval2(m, 0.5, 0.5) - 0.125) <= 10 * 3 * std::pow(2.0, -21));
}

TEST_CASE("step plateaus are exact") {
  CHECK(eval1(build_step(4, 1.0 / 16), 0.3) == 1.0);
  CHECK(eval1(build_step(4, 1.0 / 16), 0.0) == 0.0);
  CHECK(eval1(build_step(2, 1.0 / 16), 0.99) == 1.0);
  CHECK_THROWS_AS(build_step(4, 0.2), InvalidInput);
  CHECK_THROWS_AS(build_step(4, 0.0), InvalidInput);
  for (StepMode mode : {StepMode::wide, StepMode::budget})
    for (int K : {1, 2, 3, 4, 8, 12, 16, 36}) {
      const double delta = 1.0 / (4.0 * K);
      const Network st = build_step(K, delta, mode);
      for (int k = 0; k < K; ++k) {
        const double lo = static_cast<double>(k) / K;
        const double hi = k + 1 < K ? (k + 1.0) / K - delta : 1.0;
        for (int t = 0; t <= 20; ++t) CHECK(eval1(st, lo + (hi - lo) * t / 20.0) == k);
      }
    }
  const Network wide = build_step(8, 1.0 / 32);
  CHECK(wide.depth() == 2);
}

TEST_CASE("budget step respects its width and depth bounds") {
  for (int N : {1, 2, 3, 4, 8})
    for (int L : {1, 2, 3}) {
      const Network st = build_step_budget(N, L, 1, 0.25 / fold_shape(N, L, 1).K);
      CHECK(st.width() <= static_cast<std::size_t>(4 * N + 5));
      CHECK(st.depth() <= static_cast<std::size_t>(4 * L + 4));
    }
}

TEST_CASE("pointfit interpolates and clamps") {
  const std::vector<double> half(7, 0.5);
  const Network h = build_pointfit(half, 2, 2, 1);
  for (int i = 0; i < 7; ++i) CHECK(eval1(h, i) == 0.5);
  const std::vector<double> two = {0.0, 1.0};
  const Network p = build_pointfit(two, 1, 1, 1);
  CHECK(eval1(p, 0.0) == 0.0);
  CHECK(eval1(p, 1.0) == 1.0);
  const std::vector<double> bad = {0.2, 1.5};
  CHECK_THROWS_AS(build_pointfit(bad, 1, 1, 1), InvalidInput);
  CounterRng rng(3);
  std::vector<double> vals(20);
  for (double& v : vals) v = rng.uniform();
  const Network f = build_pointfit(vals, 2, 2, 2);
  for (int i = 0; i < 20; ++i) CHECK(eval1(f, i) == vals[static_cast<std::size_t>(i)]);
  for (int k = 0; k < 1000; ++k) {
    const double v = eval1(f, rng.uniform(-5, 25));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("fold shapes") {
  CHECK(integer_root(27, 3) == 3);
  CHECK(integer_root(26, 3) == 2);
  CHECK(integer_root(1000000, 2) == 1000);
  const FoldShape f = fold_shape(4, 2, 1);
  CHECK(f.A == 4);
  CHECK(f.B == 4);
  CHECK(f.K == 64);
  const FoldShape g = fold_shape_for_K(8);
  CHECK(g.A == 2);
  CHECK(g.B == 2);
  CHECK((g.l + 1) * (g.l + 1) >= g.B + 1);
}

TEST_CASE("g closed forms") {
  CHECK(g1(1, 0.3) == 1.0);
  const PartitionKit kit = build_partition_nets(1, 1, 1, 2);
  const double x[2] = {0.77, 0.13};
  double sum = 0.0;
  for (const auto& m : kit.colours) sum += kit.g_m(m, x);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("psi chains reproduce g") {
  for (auto [N, L] : {std::pair{1, 1}, {2, 1}, {4, 1}, {2, 2}, {3, 4}, {8, 1}}) {
    const PartitionKit kit = build_partition_nets(N, L, 2, 1);
    const int K = kit.shape.K;
    CHECK(kit.psi.depth() == 4);
    for (int k = 0; k <= 4096; ++k) {
      const double x = k / 4096.0;
      CHECK(std::abs(eval1(kit.phi[0], x) - kit.g(1, x)) <= 1e-10);
      CHECK(std::abs(eval1(kit.phi[1], x) - kit.g(2, x)) <= 1e-10);
      CHECK(std::abs(kit.g(1, x) + kit.g(2, x) - 1.0) <= 1e-15);
    }
    (void)K;
  }
  const PartitionKit k8 = build_partition_nets(1, 1, 4, 1, 8);
  for (int k = 0; k <= 1000; ++k) {
    const double x = k / 1000.0;
    CHECK(std::abs(eval1(k8.phi[1], x) - k8.g(2, x)) <= 1e-10);
  }
}

TEST_CASE("g support and cells") {
  for (int K : {1, 3, 4}) {
    const PartitionKit kit = build_partition_nets(1, 1, 1, 1, K);
    for (int k = 0; k < 2000; ++k) {
      const double x = (k + 0.37) / 2000.0;
      for (int m = 1; m <= 2; ++m) {
        const int mm[1] = {m};
        const double xs[1] = {x};
        if (!in_omega(mm, K, xs)) {
          CHECK(kit.g(m, x) == 0.0);
          CHECK(kit.dg(m, x) == 0.0);
        }
      }
      const double xs[1] = {x};
      const int m1[1] = {1}, m2[1] = {2};
      CHECK((in_omega(m1, K, xs) || in_omega(m2, K, xs)));
    }
  }
}
