#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sobonet/network.hpp"
#include "sobonet/relu_build.hpp"

namespace sobonet::requ {

struct Monomial {
  std::vector<int> alpha;
  double coeff = 1.0;
};

enum class PolyKind { square, product, monomial, polynomial };

struct PolySpec {
  PolyKind kind = PolyKind::square;
  std::vector<int> alpha;         // monomial
  std::vector<Monomial> terms;    // polynomial
};

Network exact_square();
Network exact_product();
// Precondition NL + 2^{floor(log2 N)} >= |alpha|; width <= 4N + 2d, depth <= L + ceil(log2 N).
Network build_exact_monomial(std::span<const int> alpha, int N, int L);
// Smallest-depth exact monomial with no budget check.
Network exact_monomial(std::span<const int> alpha);
Network build_exact_polynomial(std::span<const Monomial> terms, int d, int N, int L);
Network build_exact_poly(const PolySpec& spec, int N, int L, int d);

// Piecewise-quadratic C^1 bump supported on [0,3] and equal to 1 on [1,2].
double s_bump(double x);
double ds_bump(double x);
double d2s_bump(double x);

struct Jet1 {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

struct SmoothPartitionKit {
  relu::FoldShape shape;
  int d = 1;
  std::vector<std::vector<int>> colours;
  std::vector<Network> lambda;  // one per colour

  // s_1(x) = sum_i s(4Kx - 4i), s_2(x) = s_1(x + 1/(2K)).
  Jet1 axis(int m_j, double x) const;
  double s_m(std::span<const int> m, std::span<const double> x) const;
  std::vector<double> grad_s_m(std::span<const int> m, std::span<const double> x) const;
  std::vector<double> hess_s_m(std::span<const int> m, std::span<const double> x) const;
};

SmoothPartitionKit build_smooth_partition(int N, int L, int d, std::optional<int> K_override = {});

}  // namespace sobonet::requ
