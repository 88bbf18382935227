#include "sobonet/local_poly.hpp"

#include <algorithm>
#include <cmath>

#include "sobonet/errors.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/subdomain.hpp"

namespace sobonet {
namespace {

constexpr double kMaxNodes = 1 << 22;

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double monomial(std::span<const int> alpha, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) v *= ipow(x[j], alpha[j]);
  return v;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string alpha_key(std::span<const int> alpha) {
  std::string s;
  for (std::size_t j = 0; j < alpha.size(); ++j) s += (j ? "," : "") + std::to_string(alpha[j]);
  return s;
}

MultiIndex parse_alpha(const std::string& key) {
  MultiIndex a;
  std::size_t pos = 0;
  while (pos <= key.size()) {
    const std::size_t next = key.find(',', pos);
    a.push_back(std::stoi(key.substr(pos, next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return a;
}

struct ExpansionTerm {
  std::size_t gamma;  // output coefficient
  std::size_t alpha;  // jet coefficient
  double binom;
  MultiIndex power;   // alpha - gamma
};

}  // namespace

double Polynomial::value(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) v += coeffs[k] * monomial(alphas[k], x);
  return v;
}

std::vector<double> Polynomial::gradient(std::span<const double> x) const {
  std::vector<double> g(static_cast<std::size_t>(d), 0.0);
  for (std::size_t k = 0; k < alphas.size(); ++k)
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (alphas[k][i] == 0) continue;
      MultiIndex a = alphas[k];
      a[i] -= 1;
      g[i] += coeffs[k] * alphas[k][i] * monomial(a, x);
    }
  return g;
}

std::vector<double> Polynomial::hessian(std::span<const double> x) const {
  const auto ud = static_cast<std::size_t>(d);
  std::vector<double> h(ud * ud, 0.0);
  for (std::size_t k = 0; k < alphas.size(); ++k)
    for (std::size_t i = 0; i < ud; ++i)
      for (std::size_t j = 0; j < ud; ++j) {
        MultiIndex a = alphas[k];
        double f = a[i];
        a[i] -= 1;
        if (a[i] < 0) continue;
        f *= a[j];
        a[j] -= 1;
        if (a[j] < 0 || f == 0.0) continue;
        h[i * ud + j] += coeffs[k] * f * monomial(a, x);
      }
  return h;
}

double Polynomial::coefficient(std::span<const int> alpha) const {
  for (std::size_t k = 0; k < alphas.size(); ++k)
    if (std::equal(alpha.begin(), alpha.end(), alphas[k].begin())) return coeffs[k];
  return 0.0;
}

double bump_weight(const BallSpec& ball, std::span<const double> y) {
  double r2 = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double t = (y[j] - ball.center[j]) / ball.radius;
    r2 += t * t;
  }
  return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

Polynomial averaged_taylor(const TargetFunction& f, const BallSpec& ball, int n, int start_nodes, double tol,
                           QuadratureInfo* info) {
  const int d = f.d;
  if (static_cast<int>(ball.center.size()) != d) throw InvalidInput("ball dimension does not match the target");
  if (!(ball.radius > 0.0)) throw InvalidInput("ball radius must be positive");
  if (n < 1 || n - 1 > f.n) throw InvalidInput("averaged Taylor order must satisfy 1 <= n <= f.n + 1");
  for (int j = 0; j < d; ++j) {
    const double c = ball.center[static_cast<std::size_t>(j)];
    if (c - ball.radius < -1.0 || c + ball.radius > 2.0) throw DomainError("ball leaves the enlarged domain");
  }

  const auto space = jet_space(d, n - 1);
  Polynomial poly;
  poly.d = d;
  poly.alphas = multi_indices(d, n - 1);
  std::vector<ExpansionTerm> terms;
  for (std::size_t g = 0; g < poly.alphas.size(); ++g)
    for (std::size_t a = 0; a < poly.alphas.size(); ++a) {
      const MultiIndex& ga = poly.alphas[g];
      const MultiIndex& al = poly.alphas[a];
      bool ge = true;
      double b = 1.0;
      MultiIndex pw(static_cast<std::size_t>(d));
      for (std::size_t j = 0; j < pw.size() && ge; ++j) {
        ge = al[j] >= ga[j];
        if (!ge) break;
        b *= binomial(al[j], ga[j]);
        pw[j] = al[j] - ga[j];
      }
      if (ge) terms.push_back({g, space->position(al), b, pw});
    }

  std::vector<double> prev;
  double change = INFINITY;
  for (int q = std::max(2, start_nodes);; q *= 2) {
    if (std::pow(static_cast<double>(q), d) > kMaxNodes)
      throw QuadratureError("averaged Taylor quadrature did not converge to " + std::to_string(tol) +
                            " before " + std::to_string(q / 2) + " nodes per axis (last change " +
                            std::to_string(change) + ")");
    std::vector<double> acc(poly.alphas.size(), 0.0);
    double wsum = 0.0;
    std::vector<int> counter(static_cast<std::size_t>(d), 0);
    std::vector<double> y(static_cast<std::size_t>(d)), neg(static_cast<std::size_t>(d));
    const double h = 2.0 * ball.radius / q;
    while (true) {
      for (int j = 0; j < d; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        y[uj] = ball.center[uj] - ball.radius + (counter[uj] + 0.5) * h;
        neg[uj] = -y[uj];
      }
      const double w = bump_weight(ball, y);
      if (w > 0.0) {
        wsum += w;
        const Jet jet = f.jet(y, n - 1);
        const auto& c = jet.coefficients();
        for (const ExpansionTerm& t : terms) acc[t.gamma] += w * t.binom * c[t.alpha] * monomial(t.power, neg);
      }
      int j = d - 1;
      while (j >= 0 && ++counter[static_cast<std::size_t>(j)] == q) counter[static_cast<std::size_t>(j--)] = 0;
      if (j < 0) break;
    }
    if (!(wsum > 0.0)) continue;
    for (double& v : acc) v /= wsum;
    if (!prev.empty()) {
      change = 0.0;
      for (std::size_t k = 0; k < acc.size(); ++k) change = std::max(change, std::abs(acc[k] - prev[k]));
      if (change <= tol) {
        poly.coeffs = std::move(acc);
        if (info) *info = {q, change};
        return poly;
      }
    }
    prev = std::move(acc);
  }
}

double coefficient_bound(int n, int d) {
  const auto idx = multi_indices(d, std::max(0, n - 1));
  double s = 0.0;
  for (const auto& a : idx)
    for (const auto& b : idx)
      if (total_degree(a) + total_degree(b) <= n - 1) s += 1.0 / (multi_factorial(a) * multi_factorial(b));
  return s;
}

const PolyCell& PiecewisePoly::cell_at(std::span<const double> x) const {
  if (x.size() != m.size()) throw InvalidInput("point dimension does not match the piecewise polynomial");
  for (const PolyCell& c : cells) {
    bool inside = true;
    for (std::size_t j = 0; j < m.size() && inside; ++j) inside = cell_interval(m[j], c.i[j], K).contains(x[j]);
    if (inside) return c;
  }
  throw DomainError("point lies outside the subdomain of this piecewise polynomial");
}

PiecewisePoly build_piecewise_approx(const TargetFunction& f, int K, std::span<const int> m, int n) {
  if (K < 1) throw InvalidInput("K must be positive");
  if (static_cast<int>(m.size()) != f.d) throw InvalidInput("colour dimension does not match the target");
  PiecewisePoly p;
  p.m.assign(m.begin(), m.end());
  p.K = K;
  p.n = n;
  std::vector<int> counts;
  for (int mj : m) counts.push_back(cells_per_axis(mj, K));
  const auto idx = multi_range(counts);
  p.cells.resize(idx.size());
  parallel_tasks(idx.size(), [&](std::size_t c) {
    BallSpec ball;
    for (std::size_t j = 0; j < m.size(); ++j) ball.center.push_back(cell_center(m[j], idx[c][j], K));
    ball.radius = 1.0 / (4.0 * K);
    p.cells[c] = {idx[c], averaged_taylor(f, ball, n)};
  });
  return p;
}

std::vector<double> eval_piecewise(const PiecewisePoly& p, std::span<const double> x, int order) {
  const PolyCell& c = p.cell_at(x);
  switch (order) {
    case 0:
      return {c.poly.value(x)};
    case 1:
      return c.poly.gradient(x);
    case 2:
      return c.poly.hessian(x);
    default:
      throw UnsupportedOrder("piecewise polynomial order must be 0, 1 or 2");
  }
}

nlohmann::json to_json(const PiecewisePoly& p) {
  nlohmann::json cells = nlohmann::json::array();
  for (const PolyCell& c : p.cells) {
    nlohmann::json coeffs = nlohmann::json::object();
    for (std::size_t k = 0; k < c.poly.alphas.size(); ++k) coeffs[alpha_key(c.poly.alphas[k])] = c.poly.coeffs[k];
    cells.push_back({{"i", c.i}, {"coeffs", coeffs}});
  }
  return {{"m", p.m}, {"K", p.K}, {"n", p.n}, {"cells", cells}};
}

PiecewisePoly piecewise_from_json(const nlohmann::json& j) {
  try {
    PiecewisePoly p;
    p.m = j.at("m").get<std::vector<int>>();
    p.K = j.at("K").get<int>();
    p.n = j.value("n", 1);
    for (const auto& jc : j.at("cells")) {
      PolyCell c;
      c.i = jc.at("i").get<std::vector<int>>();
      c.poly.d = static_cast<int>(p.m.size());
      for (const auto& [key, v] : jc.at("coeffs").items()) {
        c.poly.alphas.push_back(parse_alpha(key));
        c.poly.coeffs.push_back(v.get<double>());
      }
      p.cells.push_back(std::move(c));
    }
    return p;
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("malformed piecewise polynomial: ") + e.what());
  }
}

double UnityWeights::h(double t) {
  const double a = std::abs(t);
  if (a <= 1.5) return 1.0;
  if (a <= 2.5) return 2.5 - a;
  return 0.0;
}

double UnityWeights::weight(int i, double x) const { return h(4.0 * K * (x - cell_center(m_j, i, K))); }

double UnityWeights::tensor(std::span<const int> m, std::span<const int> i, std::span<const double> x) const {
  double w = 1.0;
  for (std::size_t j = 0; j < m.size(); ++j) w *= h(4.0 * K * (x[j] - cell_center(m[j], i[j], K)));
  return w;
}

}  // namespace sobonet
