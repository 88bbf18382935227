#pragma once

#include <memory>
#include <span>
#include <vector>

namespace sobonet {

using MultiIndex = std::vector<int>;

// All multi-indices in N^d with |alpha| <= order, graded then lexicographic (first axis slowest).
std::vector<MultiIndex> multi_indices(int d, int order);
int total_degree(std::span<const int> alpha);
double factorial(int n);
double multi_factorial(std::span<const int> alpha);

// Index tables for truncated Taylor series in d variables.
class JetSpace {
 public:
  JetSpace(int d, int order);

  int dim() const { return d_; }
  int order() const { return order_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& index(std::size_t k) const { return indices_[k]; }
  std::size_t position(std::span<const int> alpha) const;

  struct Term {
    std::size_t a, b, out;
  };
  const std::vector<Term>& products() const { return products_; }

 private:
  int d_, order_;
  std::vector<MultiIndex> indices_;
  std::vector<Term> products_;
};

std::shared_ptr<const JetSpace> jet_space(int d, int order);

// Truncated Taylor expansion: coefficient k multiplies (x - x0)^index(k).
class Jet {
 public:
  Jet() = default;
  Jet(std::shared_ptr<const JetSpace> space, double constant);
  static Jet variable(std::shared_ptr<const JetSpace> space, std::size_t j, double x0);

  const JetSpace& space() const { return *space_; }
  double value() const { return c_[0]; }
  double coefficient(std::span<const int> alpha) const;
  // D^alpha of the expanded function at the base point.
  double derivative(std::span<const int> alpha) const;
  const std::vector<double>& coefficients() const { return c_; }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator*=(double s);
  Jet operator-() const;

  // g(u) for g with derivatives g^(k)(u0), k = 0..order, at u0 = value().
  Jet compose(std::span<const double> derivs) const;

 private:
  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);

Jet exp(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet reciprocal(const Jet& a);
Jet operator/(const Jet& a, const Jet& b);
Jet pow(const Jet& a, int k);

}  // namespace sobonet
