#include "sobonet/target.hpp"

#include <cmath>
#include <numbers>

#include "sobonet/errors.hpp"

namespace sobonet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_domain(std::span<const double> x, int d) {
  if (static_cast<int>(x.size()) != d)
    throw InvalidInput("target expects dimension " + std::to_string(d) + ", got " + std::to_string(x.size()));
  for (double v : x)
    if (!(v >= -1.0 && v <= 2.0)) throw DomainError("target evaluated outside [-1,2]^d");
}

}  // namespace

Jet TargetFunction::jet(std::span<const double> x, int order) const {
  check_domain(x, d);
  const auto space = jet_space(d, order);
  std::vector<Jet> vars;
  vars.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) vars.push_back(Jet::variable(space, j, x[j]));
  return expr(vars);
}

double TargetFunction::value(std::span<const double> x) const { return jet(x, 0).value(); }

double TargetFunction::derivative(std::span<const int> alpha, std::span<const double> x) const {
  for (int a : alpha)
    if (a < 0) throw InvalidInput("negative multi-index entry");
  const int order = total_degree(alpha);
  if (order > n)
    throw InvalidInput("derivative order " + std::to_string(order) + " exceeds the target smoothness " +
                       std::to_string(n));
  return jet(x, order).derivative(alpha);
}

std::vector<double> TargetFunction::gradient(std::span<const double> x) const {
  const Jet j = jet(x, 1);
  std::vector<double> g(static_cast<std::size_t>(d));
  MultiIndex e(static_cast<std::size_t>(d), 0);
  for (int i = 0; i < d; ++i) {
    e.assign(static_cast<std::size_t>(d), 0);
    e[static_cast<std::size_t>(i)] = 1;
    g[static_cast<std::size_t>(i)] = j.derivative(e);
  }
  return g;
}

std::vector<double> TargetFunction::hessian(std::span<const double> x) const {
  const Jet j = jet(x, 2);
  const auto ud = static_cast<std::size_t>(d);
  std::vector<double> h(ud * ud);
  for (std::size_t a = 0; a < ud; ++a)
    for (std::size_t b = 0; b < ud; ++b) {
      MultiIndex e(ud, 0);
      e[a] += 1;
      e[b] += 1;
      h[a * ud + b] = j.derivative(e);
    }
  return h;
}

double target_derivative(const TargetFunction& f, std::span<const int> alpha, std::span<const double> x) {
  return f.derivative(alpha, x);
}

std::vector<std::string> target_names() {
  return {"sin1d", "cos1d", "x", "x2", "x3", "poly1d", "xy", "sinprod", "expsum"};
}

TargetFunction make_target(const std::string& name, int n, int d) {
  if (n < 1) throw InvalidInput("target smoothness n must be at least 1");
  TargetFunction f;
  f.name = name;
  f.n = n;
  auto fixed_dim = [&](int want) {
    if (d != 0 && d != want)
      throw InvalidInput("target '" + name + "' is defined for d = " + std::to_string(want));
    f.d = want;
  };
  const double scale = std::pow(kTwoPi, -n);
  if (name == "sin1d") {
    fixed_dim(1);
    f.expr = [scale](std::span<const Jet> x) { return scale * sin(kTwoPi * x[0]); };
  } else if (name == "cos1d") {
    fixed_dim(1);
    f.expr = [scale](std::span<const Jet> x) { return scale * cos(kTwoPi * x[0]); };
  } else if (name == "x") {
    fixed_dim(1);
    f.expr = [](std::span<const Jet> x) { return x[0]; };
  } else if (name == "x2") {
    fixed_dim(1);
    f.sobolev_bound = 2.0;
    f.expr = [](std::span<const Jet> x) { return x[0] * x[0]; };
  } else if (name == "x3") {
    fixed_dim(1);
    f.expr = [](std::span<const Jet> x) { return (1.0 / 6.0) * x[0] * x[0] * x[0]; };
  } else if (name == "poly1d") {
    fixed_dim(1);
    f.expr = [](std::span<const Jet> x) { return 0.25 - 0.5 * x[0] + 0.5 * x[0] * x[0]; };
  } else if (name == "xy") {
    fixed_dim(2);
    f.expr = [](std::span<const Jet> x) { return x[0] * x[1]; };
  } else if (name == "sinprod") {
    f.d = d == 0 ? 2 : d;
    const double s = std::pow(kTwoPi, -n);
    f.expr = [s](std::span<const Jet> x) {
      Jet p = sin(kTwoPi * x[0]);
      for (std::size_t j = 1; j < x.size(); ++j) p *= sin(kTwoPi * x[j]);
      return s * p;
    };
  } else if (name == "expsum") {
    f.d = d == 0 ? 1 : d;
    const double s = std::exp(-static_cast<double>(f.d));
    f.expr = [s](std::span<const Jet> x) {
      Jet sum = x[0];
      for (std::size_t j = 1; j < x.size(); ++j) sum += x[j];
      return s * exp(sum);
    };
  } else {
    throw InvalidInput("unknown target '" + name + "'");
  }
  if (f.d < 1) throw InvalidInput("target dimension must be positive");
  return f;
}

}  // namespace sobonet
