#include "sobonet/jet.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "sobonet/errors.hpp"

namespace sobonet {

std::vector<MultiIndex> multi_indices(int d, int order) {
  std::vector<MultiIndex> out;
  for (int deg = 0; deg <= order; ++deg) {
    MultiIndex cur(static_cast<std::size_t>(d), 0);
    // Enumerate compositions of deg into d parts, first axis largest first.
    auto rec = [&](auto&& self, std::size_t j, int left) -> void {
      if (j + 1 == cur.size()) {
        cur[j] = left;
        out.push_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[j] = v;
        self(self, j + 1, left - v);
      }
    };
    if (d == 0) {
      if (deg == 0) out.push_back(cur);
      continue;
    }
    rec(rec, 0, deg);
  }
  return out;
}

int total_degree(std::span<const int> alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double multi_factorial(std::span<const int> alpha) {
  double f = 1.0;
  for (int a : alpha) f *= factorial(a);
  return f;
}

JetSpace::JetSpace(int d, int order) : d_(d), order_(order), indices_(multi_indices(d, order)) {
  if (d < 1 || order < 0) throw InvalidInput("jet space needs d >= 1 and order >= 0");
  for (std::size_t a = 0; a < indices_.size(); ++a)
    for (std::size_t b = 0; b < indices_.size(); ++b) {
      if (total_degree(indices_[a]) + total_degree(indices_[b]) > order_) continue;
      MultiIndex s(indices_[a]);
      for (std::size_t j = 0; j < s.size(); ++j) s[j] += indices_[b][j];
      products_.push_back({a, b, position(s)});
    }
}

std::size_t JetSpace::position(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != d_) throw InvalidInput("multi-index has the wrong dimension");
  if (total_degree(alpha) > order_) throw InvalidInput("multi-index order exceeds the jet order");
  for (std::size_t k = 0; k < indices_.size(); ++k)
    if (std::equal(alpha.begin(), alpha.end(), indices_[k].begin())) return k;
  throw InvalidInput("negative multi-index entry");
}

std::shared_ptr<const JetSpace> jet_space(int d, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{d, order}];
  if (!slot) slot = std::make_shared<const JetSpace>(d, order);
  return slot;
}

Jet::Jet(std::shared_ptr<const JetSpace> space, double constant)
    : space_(std::move(space)), c_(space_->size(), 0.0) {
  c_[0] = constant;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> space, std::size_t j, double x0) {
  Jet v(space, x0);
  if (space->order() >= 1) {
    MultiIndex e(static_cast<std::size_t>(space->dim()), 0);
    e[j] = 1;
    v.c_[space->position(e)] = 1.0;
  }
  return v;
}

double Jet::coefficient(std::span<const int> alpha) const { return c_[space_->position(alpha)]; }

double Jet::derivative(std::span<const int> alpha) const {
  return coefficient(alpha) * multi_factorial(alpha);
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  std::vector<double> r(c_.size(), 0.0);
  for (const auto& t : space_->products()) r[t.out] += c_[t.a] * o.c_[t.b];
  c_ = std::move(r);
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  r *= -1.0;
  return r;
}

Jet Jet::compose(std::span<const double> derivs) const {
  const int order = space_->order();
  if (static_cast<int>(derivs.size()) < order + 1) throw InvalidInput("compose needs order+1 derivatives");
  Jet h = *this;
  h.c_[0] = 0.0;
  Jet r(space_, derivs[static_cast<std::size_t>(order)] / factorial(order));
  for (int k = order - 1; k >= 0; --k) {
    r *= h;
    r += derivs[static_cast<std::size_t>(k)] / factorial(k);
  }
  return r;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(const Jet& a, const Jet& b) {
  Jet r = a;
  r *= b;
  return r;
}
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a += -s; }
Jet operator-(double s, const Jet& a) { return (-a) += s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }

Jet exp(const Jet& a) {
  const std::vector<double> d(static_cast<std::size_t>(a.space().order() + 1), std::exp(a.value()));
  return a.compose(d);
}

namespace {
std::vector<double> trig_derivs(double u, int order, bool cosine) {
  const double s = std::sin(u), c = std::cos(u);
  const double cycle_sin[4] = {s, c, -s, -c};
  const double cycle_cos[4] = {c, -s, -c, s};
  std::vector<double> d(static_cast<std::size_t>(order + 1));
  for (int k = 0; k <= order; ++k) d[static_cast<std::size_t>(k)] = (cosine ? cycle_cos : cycle_sin)[k % 4];
  return d;
}
}  // namespace

Jet sin(const Jet& a) { return a.compose(trig_derivs(a.value(), a.space().order(), false)); }
Jet cos(const Jet& a) { return a.compose(trig_derivs(a.value(), a.space().order(), true)); }

Jet reciprocal(const Jet& a) {
  const double u = a.value();
  if (u == 0.0) throw DomainError("reciprocal of a jet with zero value");
  const int order = a.space().order();
  std::vector<double> d(static_cast<std::size_t>(order + 1));
  double p = 1.0 / u;
  for (int k = 0; k <= order; ++k) {
    d[static_cast<std::size_t>(k)] = p;
    p *= -(k + 1) / u;
  }
  return a.compose(d);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet pow(const Jet& a, int k) {
  if (k < 0) return reciprocal(pow(a, -k));
  Jet r(std::shared_ptr<const JetSpace>(jet_space(a.space().dim(), a.space().order())), 1.0);
  for (int i = 0; i < k; ++i) r *= a;
  return r;
}

}  // namespace sobonet
