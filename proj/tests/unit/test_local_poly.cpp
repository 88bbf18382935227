#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sobonet/errors.hpp"
#include "sobonet/jet.hpp"
#include "sobonet/local_poly.hpp"
#include "sobonet/subdomain.hpp"
#include "sobonet/target.hpp"

using namespace sobonet;

namespace {

// L-infinity error of the piecewise approximant over a dense grid of Omega_m (d = 1).
double sup_error_1d(const TargetFunction& f, const PiecewisePoly& p, int order) {
  double err = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double x[1] = {(k + 0.5) / 20000.0};
    if (!in_omega(p.m, p.K, x)) continue;
    const double got = eval_piecewise(p, x, order)[0];
    const double ref = order == 0 ? f.value(x) : f.gradient(x)[0];
    err = std::max(err, std::abs(got - ref));
  }
  return err;
}

}  // namespace

TEST_CASE("jet arithmetic matches closed forms") {
  const auto sp = jet_space(2, 3);
  const Jet x = Jet::variable(sp, 0, 0.3), y = Jet::variable(sp, 1, -0.7);
  const Jet f = exp(x * y) + sin(x) / (2.0 + cos(y));
  const double h = 1e-4;
  auto F = [](double a, double b) { return std::exp(a * b) + std::sin(a) / (2.0 + std::cos(b)); };
  const int dx[2] = {1, 0}, dy[2] = {0, 1}, dxy[2] = {1, 1};
  CHECK(f.derivative(dx) == doctest::Approx((F(0.3 + h, -0.7) - F(0.3 - h, -0.7)) / (2 * h)).epsilon(1e-7));
  CHECK(f.derivative(dy) == doctest::Approx((F(0.3, -0.7 + h) - F(0.3, -0.7 - h)) / (2 * h)).epsilon(1e-7));
  const double fxy = (F(0.3 + h, -0.7 + h) - F(0.3 + h, -0.7 - h) - F(0.3 - h, -0.7 + h) + F(0.3 - h, -0.7 - h)) /
                     (4 * h * h);
  CHECK(f.derivative(dxy) == doctest::Approx(fxy).epsilon(1e-5));
  CHECK(multi_indices(2, 2).size() == 6);
}

TEST_CASE("target derivatives") {
  const TargetFunction s3 = make_target("sin1d", 3);
  const double zero[1] = {0.0};
  const int a0[1] = {0}, a1[1] = {1}, a2[1] = {2}, a4[1] = {4};
  CHECK(target_derivative(s3, a0, zero) == doctest::Approx(0.0));
  CHECK(target_derivative(s3, a1, zero) == doctest::Approx(0.0253303).epsilon(1e-6));
  CHECK_THROWS_AS(target_derivative(s3, a4, zero), InvalidInput);
  const TargetFunction x2 = make_target("x2", 3);
  for (double v : {-0.5, 0.2, 1.7}) {
    const double xs[1] = {v};
    CHECK(x2.derivative(a2, xs) == 2.0);
  }
  const double outside[1] = {2.5};
  CHECK_THROWS_AS(x2.value(outside), DomainError);
  CHECK_THROWS_AS(make_target("nope", 2), InvalidInput);
  for (const auto& name : target_names()) {
    const TargetFunction f = make_target(name, 3);
    std::vector<double> x(static_cast<std::size_t>(f.d), 0.37);
    const auto g = f.gradient(x);
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      CHECK(g[j] == doctest::Approx((f.value(xp) - f.value(xm)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("averaged Taylor reproduces polynomials") {
  const TargetFunction x2 = make_target("x2", 3);
  const BallSpec ball{{0.5}, 0.1};
  const Polynomial q2 = averaged_taylor(x2, ball, 2);
  const int e1[1] = {1};
  CHECK(std::abs(q2.coefficient(e1) - 1.0) <= 1e-8);
  const Polynomial q3 = averaged_taylor(x2, ball, 3);
  const int e0[1] = {0}, e2[1] = {2};
  CHECK(std::abs(q3.coefficient(e0)) <= 1e-8);
  CHECK(std::abs(q3.coefficient(e1)) <= 1e-8);
  CHECK(std::abs(q3.coefficient(e2) - 1.0) <= 1e-8);

  for (const char* name : {"poly1d", "x", "xy"}) {
    const TargetFunction f = make_target(name, 3);
    BallSpec b{std::vector<double>(static_cast<std::size_t>(f.d), 0.41), 0.0625};
    const Polynomial q = averaged_taylor(f, b, 3);
    for (double t : {0.1, 0.5, 0.9}) {
      std::vector<double> x(static_cast<std::size_t>(f.d), t);
      x[0] = 1.0 - t;
      CHECK(std::abs(q.value(x) - f.value(x)) <= 1e-8);
    }
  }
  const TargetFunction x3 = make_target("x3", 4);
  const Polynomial q4 = averaged_taylor(x3, ball, 4);
  const double pt[1] = {0.77};
  CHECK(std::abs(q4.value(pt) - x3.value(pt)) <= 1e-8);
}

TEST_CASE("bump weights normalize") {
  const BallSpec ball{{0.2, 0.4}, 0.05};
  double s = 0.0, cnt = 0;
  const int q = 200;
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) {
      const double y[2] = {0.15 + (i + 0.5) * 0.1 / q, 0.35 + (j + 0.5) * 0.1 / q};
      s += bump_weight(ball, y);
      ++cnt;
    }
  CHECK(s > 0.0);
  const double outside[2] = {0.3, 0.4};
  CHECK(bump_weight(ball, outside) == 0.0);
}

TEST_CASE("coefficient bound") {
  CHECK(coefficient_bound(2, 1) == doctest::Approx(3.0));
  CHECK(coefficient_bound(1, 3) == doctest::Approx(1.0));
}

TEST_CASE("piecewise approximants") {
  const TargetFunction f = make_target("sin1d", 3);
  const int m1[1] = {1};
  const PiecewisePoly p8 = build_piecewise_approx(f, 8, m1, 3);
  const PiecewisePoly p16 = build_piecewise_approx(f, 16, m1, 3);
  for (const auto* p : {&p8, &p16})
    for (const auto& c : p->cells)
      for (double v : c.poly.coeffs) CHECK(std::abs(v) <= coefficient_bound(3, 1));
  const double ratio = sup_error_1d(f, p8, 0) / sup_error_1d(f, p16, 0);
  CHECK(ratio >= 4.0);
  CHECK(ratio <= 16.0);

  const double a[1] = {0.02}, b[1] = {0.05};
  CHECK(&p8.cell_at(a) == &p8.cell_at(b));
  const double gap[1] = {0.1};
  CHECK_THROWS_AS(eval_piecewise(p8, gap, 0), DomainError);
  const double mid[1] = {0.4};
  const double h = 1e-6;
  const double lo[1] = {0.4 - h}, hi[1] = {0.4 + h};
  CHECK(eval_piecewise(p8, mid, 1)[0] ==
        doctest::Approx((eval_piecewise(p8, hi, 0)[0] - eval_piecewise(p8, lo, 0)[0]) / (2 * h)).epsilon(1e-7));

  const TargetFunction id = make_target("x", 2);
  const int m2[1] = {2};
  const PiecewisePoly px = build_piecewise_approx(id, 4, m2, 2);
  const double q[1] = {0.55};
  CHECK(eval_piecewise(px, q, 0)[0] == doctest::Approx(0.55).epsilon(1e-9));
  CHECK(eval_piecewise(px, q, 1)[0] == doctest::Approx(1.0).epsilon(1e-9));

  const PiecewisePoly back = piecewise_from_json(to_json(p8));
  CHECK(eval_piecewise(back, mid, 0)[0] == eval_piecewise(p8, mid, 0)[0]);
}

TEST_CASE("error decreases with K") {
  for (const char* name : {"sin1d", "cos1d", "expsum"}) {
    const TargetFunction f = make_target(name, 3);
    for (int m = 1; m <= 2; ++m) {
      const int mm[1] = {m};
      double prev = INFINITY;
      for (int K : {4, 8, 16, 32}) {
        const double e = sup_error_1d(f, build_piecewise_approx(f, K, mm, 3), 0);
        CHECK(e <= prev);
        prev = e;
      }
    }
  }
}

TEST_CASE("unity weights") {
  for (int K : {1, 3, 8}) {
    for (int m = 1; m <= 2; ++m) {
      const UnityWeights u{K, m};
      for (int k = 0; k <= 1000; ++k) {
        const double x = k / 1000.0;
        double s = 0.0;
        for (int i = 0; i < u.count(); ++i) s += u.weight(i, x);
        CHECK(std::abs(s - 1.0) <= 1e-12);
        const int cell = locate_axis(m, K, x);
        if (cell >= 0) CHECK(u.weight(cell, x) == 1.0);
      }
    }
  }
}

TEST_CASE("two-dimensional approximant") {
  const TargetFunction f = make_target("sinprod", 2, 2);
  const int m[2] = {1, 2};
  const PiecewisePoly p = build_piecewise_approx(f, 4, m, 2);
  CHECK(p.cells.size() == 4 * 5);
  const double x[2] = {0.3, 0.55};
  CHECK(std::abs(eval_piecewise(p, x, 0)[0] - f.value(x)) <= 0.05);
}
