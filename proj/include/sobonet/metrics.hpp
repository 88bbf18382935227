#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sobonet/local_poly.hpp"
#include "sobonet/network.hpp"
#include "sobonet/report.hpp"
#include "sobonet/subdomain.hpp"
#include "sobonet/target.hpp"

namespace sobonet {

// Tensor grid with points lo + (k + jitter) * (hi - lo) / points along each axis.
struct GridSpec {
  int d = 1;
  int points = 1;
  double jitter = 0.5;
  std::vector<Interval> box;  // empty means [0,1]^d

  // Offsets of 1/3 keep the points off the dyadic knots of teeth-based networks.
  static GridSpec standard(int d);
  // Doubles the resolution; with jitter 1/3 or 2/3 the coarse points stay in the fine grid.
  GridSpec refined() const;
  std::size_t size() const;
  void point(std::size_t index, std::span<double> out) const;
  std::string label() const;
};

struct Sample {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian;
  bool breakpoint = false;
};

// Returns nullopt where the function is not defined (e.g. outside Omega_m).
using Evaluator = std::function<std::optional<Sample>(std::span<const double> x, int order)>;

Evaluator evaluator(const TargetFunction& f);
Evaluator evaluator(const PiecewisePoly& p);
Evaluator evaluator(const Network& net);

struct OrderError {
  int order = 0;
  double sup = 0.0;
  std::vector<double> argmax;
};

struct ErrorReport {
  std::vector<OrderError> orders;  // orders 0..max
  GridSpec grid;
  std::size_t discarded = 0;  // breakpoint samples
  std::size_t outside = 0;    // samples where either side is undefined

  double at(int order) const;
  double sobolev() const;  // max over the reported orders
};

// Largest |D^alpha(reference - approx)| over |alpha| = k at x, or nullopt if undefined there.
std::optional<double> error_at(const Evaluator& reference, const Evaluator& approx, int k,
                               std::span<const double> x);

ErrorReport sup_error(const Evaluator& reference, const Evaluator& approx, int order,
                      const GridSpec& grid);
ErrorReport sup_error(const TargetFunction& f, const Network& net, int order, const GridSpec& grid);
ErrorReport sup_error(const PiecewisePoly& p, const Network& net, int order, const GridSpec& grid);

CsvTable error_table(const ErrorReport& report);

struct FdReport {
  double max_deviation = 0.0;  // |analytic - central| / max(1, |analytic|)
  std::size_t checked = 0;
  std::size_t flagged = 0;
};

// Points whose stencil changes the activation pattern are flagged and skipped.
FdReport fd_check(const Network& net, std::span<const std::vector<double>> points, double h);

// Sign pattern of every hidden pre-activation (positive or not) at x.
std::vector<bool> activation_pattern(const Network& net, std::span<const double> x);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log(error) against log(K).
RateFit rate_fit(std::span<const std::pair<double, double>> pairs);

enum class PropagationKind { composition, product };

struct NormSet {
  int d = 1;  // input dimension of the inner map
  int m = 1;  // output dimension of the inner map
  double g_sup = 0.0;
  double g_semi = 0.0;
  double f_sup = 0.0;
  double f_semi = 0.0;
};

double norm_propagation(PropagationKind kind, const NormSet& norms);

}  // namespace sobonet
