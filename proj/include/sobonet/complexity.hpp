#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sobonet/arch.hpp"
#include "sobonet/local_poly.hpp"

namespace sobonet {

// 2 (2 e M D / W)^W; requires W <= M.
double warren_count(int M, int D, int W);

struct BoundReport {
  std::size_t U = 0;
  double vc_upper = 0.0;
  double pdim_upper = 0.0;
  ArchSpec arch;
};

std::size_t capacity_u(const ArchSpec& arch);
double vc_formula(std::size_t L, std::size_t U);
BoundReport vc_pdim_upper(const ArchSpec& arch);

// Exact count of distinct sign vectors 1[u_k a + v_k > 0] over a in R.
std::size_t affine_pattern_count(std::span<const std::pair<double, double>> lines);
// Distinct sign vectors of the family at sampled points of [-R, R]^W (a lower bound).
std::size_t sampled_pattern_count(std::span<const Polynomial> family, std::size_t samples, std::uint64_t seed,
                                  double R = 4.0);

enum class ThetaSampler { random, grid };

struct ShatterConfig {
  ThetaSampler sampler = ThetaSampler::random;
  std::size_t grid_levels = 9;  // grid sampler: levels per parameter on [-R, R]
  std::size_t samples = 100000;
  std::uint64_t seed = 7;
  double R = 4.0;
};

struct ShatterInstance {
  std::vector<std::vector<double>> points;
  std::size_t coordinate = 0;
  std::size_t patterns_found = 0;
  bool shattered = false;
  std::size_t samples_used = 0;
  ShatterConfig config;
};

// Evenly spaced points in one dimension, seeded uniform points otherwise.
std::vector<std::vector<double>> default_points(std::size_t d, std::size_t m, std::uint64_t seed);

// Sign patterns 1[D_i phi(x_j; theta) > 0] over sampled theta. Stops early once all 2^m appear.
ShatterInstance shatter_search(const ArchSpec& arch, std::span<const std::vector<double>> points, std::size_t i,
                               const ShatterConfig& cfg);

// Largest m <= m_max whose default point set is shattered.
std::size_t best_shattered(const ArchSpec& arch, std::size_t m_max, std::size_t i, const ShatterConfig& cfg);

struct BumpGrid {
  int M = 1;
  int d = 1;
  int n = 1;
  int i = 0;               // coordinate of the sign witness
  std::vector<int> beta;   // +-1 per centre, lexicographic in theta
  double scale = 1.0;      // C5

  std::size_t centres() const { return beta.size(); }
  std::vector<double> centre(std::size_t theta) const;
  double value(std::span<const double> x) const;
  double derivative(std::span<const int> alpha, std::span<const double> x) const;
};

// Unscaled bump e * y_i * exp(-1 / (1 - 9|y|^2)) on |y| < 1/3, as a jet of the requested order.
Jet bump_jet(std::span<const double> y, int i, int order);
BumpGrid bump_grid(int M, int d, int n, std::span<const int> beta, int i = 0);

enum class LogBase { natural, two };

struct GenBound {
  double rad_phi = 0.0;
  double rad_dphi = 0.0;
  double gap = 0.0;
};

// 28 B sqrt(P/M) sqrt(log(2 e M / P)) per class, then 4(B+1)(d R(DPhi) + R(Phi)).
double rademacher_term(double pdim, double B, double M, LogBase base = LogBase::natural);
GenBound gen_bound(double pdim_phi, double pdim_dphi, double B, int d, double M, LogBase base = LogBase::natural);

}  // namespace sobonet
