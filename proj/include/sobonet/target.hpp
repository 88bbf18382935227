#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sobonet/jet.hpp"

namespace sobonet {

// Smooth target on the enlarged box [-1,2]^d with closed-form derivatives up to order n.
struct TargetFunction {
  std::string name;
  int d = 1;
  int n = 1;
  double sobolev_bound = 1.0;
  std::function<Jet(std::span<const Jet>)> expr;

  Jet jet(std::span<const double> x, int order) const;
  double value(std::span<const double> x) const;
  double derivative(std::span<const int> alpha, std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
  std::vector<double> hessian(std::span<const double> x) const;
};

// Known names: sin1d, cos1d, x, x2, x3, poly1d, xy, sinprod, expsum.
TargetFunction make_target(const std::string& name, int n, int d = 0);
std::vector<std::string> target_names();

double target_derivative(const TargetFunction& f, std::span<const int> alpha, std::span<const double> x);

}  // namespace sobonet
