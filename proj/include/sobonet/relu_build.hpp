#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sobonet/network.hpp"

namespace sobonet::relu {

// Builders below request squares no more accurate than this (relative to a^2).
inline constexpr double precision_floor = 1e-12;

Network build_teeth(int i);

// Explicit s-teeth square on (-a, a): a^2 * (|x/a| - sum_i T_i(x/a) / 4^i).
Network square_with_teeth(int s, double a);
// Smallest teeth count whose measured W^{1,inf}((-a,a)) error meets target (floored).
int square_teeth_for(double a, double target, int start);
double square_error(const Network& square, double a);

Network build_square(int N, int L, double a);

// 2[psi((x+y)/2) - psi(x/2) - psi(y/2)] with the three squares interleaved neuron by neuron.
Network product_with_teeth(int s, double a);
Network build_product2(int N, int L, double a);
Network build_product2_target(double a, double target, int start_teeth);

// Left-to-right chain of two-factor products on [0,1]^s.
Network build_multiprod(int s, int N, int L);
Network multiprod_with_target(int s, double target, int start_teeth);

// s = 0 selects s = |alpha|.
Network build_monomial(std::span<const int> alpha, int N, int L, int s = 0);

enum class StepMode { wide, budget };

// Budget mode chains staircases whose level counts multiply to K, each at most max_levels
// (0 picks a default from K).
Network build_step(int K, double delta, StepMode mode = StepMode::wide, int max_levels = 0);
// Budget mode for K = floor(N^{1/d})^2 floor(L^{2/d}), enforcing width <= 4N+5, depth <= 4L+4.
Network build_step_budget(int N, int L, int d, double delta);

Network build_pointfit(std::span<const double> values, int N, int L, int s);

struct FoldShape {
  int K = 1;
  int A = 1;
  int B = 1;
  int l = 1;
};

// Largest integer r with r^k <= v.
int integer_root(long long v, int k);
FoldShape fold_shape(int N, int L, int d);
FoldShape fold_shape_for_K(int K);

struct PartitionKit {
  FoldShape shape;
  int d = 1;
  std::vector<std::vector<int>> colours;  // lexicographic {1,2}^d
  Network psi1, psi2, psi3, psi4, psi;
  std::vector<Network> phi;  // one per colour, same order

  double g(int m_j, double x) const;
  double dg(int m_j, double x) const;
  double g_m(std::span<const int> m, std::span<const double> x) const;
  std::vector<double> grad_g_m(std::span<const int> m, std::span<const double> x) const;
};

PartitionKit build_partition_nets(int N, int L, int n, int d, std::optional<int> K_override = {});

// Periodic closed forms at resolution K.
double g1(int K, double x);
double dg1(int K, double x);

}  // namespace sobonet::relu
