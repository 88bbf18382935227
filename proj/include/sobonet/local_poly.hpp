#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobonet/jet.hpp"
#include "sobonet/target.hpp"

namespace sobonet {

struct BallSpec {
  std::vector<double> center;
  double radius = 0.0;
};

// Coefficients of a polynomial in global monomials x^alpha.
struct Polynomial {
  int d = 1;
  std::vector<MultiIndex> alphas;
  std::vector<double> coeffs;

  double value(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
  std::vector<double> hessian(std::span<const double> x) const;
  double coefficient(std::span<const int> alpha) const;
};

struct QuadratureInfo {
  int nodes_per_axis = 0;
  double last_change = 0.0;
};

// Unnormalized bump exp(-1/(1 - |y - x0|^2 / r^2)) inside the ball.
double bump_weight(const BallSpec& ball, std::span<const double> y);

// Averaged Taylor polynomial Q^n f over the ball, degree <= n-1. Node counts per axis start at
// start_nodes and double until successive coefficient sets agree to tol.
Polynomial averaged_taylor(const TargetFunction& f, const BallSpec& ball, int n, int start_nodes = 8,
                           double tol = 1e-8, QuadratureInfo* info = nullptr);

double coefficient_bound(int n, int d);  // C2(n,d)

struct PolyCell {
  std::vector<int> i;
  Polynomial poly;
};

struct PiecewisePoly {
  std::vector<int> m;
  int K = 1;
  int n = 1;
  std::vector<PolyCell> cells;  // lexicographic in i

  const PolyCell& cell_at(std::span<const double> x) const;
};

PiecewisePoly build_piecewise_approx(const TargetFunction& f, int K, std::span<const int> m, int n);

// 0: {value}; 1: gradient; 2: row-major hessian.
std::vector<double> eval_piecewise(const PiecewisePoly& p, std::span<const double> x, int order);

nlohmann::json to_json(const PiecewisePoly& p);
PiecewisePoly piecewise_from_json(const nlohmann::json& j);

// h_i(x) = h(4K(x - c_i)) with h = 1 on |t| <= 3/2, 5/2 - |t| on [3/2, 5/2].
struct UnityWeights {
  int K = 1;
  int m_j = 1;

  static double h(double t);
  int count() const { return K + 1; }
  double weight(int i, double x) const;
  double tensor(std::span<const int> m, std::span<const int> i, std::span<const double> x) const;
};

}  // namespace sobonet
