#include "sobonet/requ_build.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "sobonet/combine.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/subdomain.hpp"

namespace sobonet::requ {
namespace {

// Linear form over the previous layer's outputs.
struct Lin {
  std::map<std::size_t, double> terms;
  double bias = 0.0;
  int log2_bound = 1;  // magnitude bound 2^log2_bound on the nominal input box [-2,2]^d
};

Lin input(std::size_t j) {
  Lin l;
  l.terms[j] = 1.0;
  return l;
}

Lin combine(const Lin& p, double a, const Lin& q, double b) {
  Lin r;
  for (auto [c, w] : p.terms) r.terms[c] += a * w;
  for (auto [c, w] : q.terms) r.terms[c] += b * w;
  r.bias = a * p.bias + b * q.bias;
  return r;
}

class LayerPlan {
 public:
  explicit LayerPlan(std::size_t cols) : cols_(cols) {}

  std::size_t neuron(const Lin& pre, Activation act) {
    rows_.push_back(pre);
    acts_.push_back(act);
    return rows_.size() - 1;
  }

  // xy = ((cx + y/c)^2 - (cx - y/c)^2) / 4 with four requ neurons; the power of two c balances
  // the magnitudes of the two factors to limit cancellation.
  Lin product(const Lin& p, const Lin& q) {
    const double c = std::ldexp(1.0, (q.log2_bound - p.log2_bound) / 2);
    const Lin sum = combine(p, c, q, 1.0 / c), diff = combine(p, c, q, -1.0 / c);
    Lin out;
    out.terms[neuron(sum, Activation::requ)] = 0.25;
    out.terms[neuron(combine(sum, -1.0, sum, 0.0), Activation::requ)] = 0.25;
    out.terms[neuron(diff, Activation::requ)] = -0.25;
    out.terms[neuron(combine(diff, -1.0, diff, 0.0), Activation::requ)] = -0.25;
    out.log2_bound = p.log2_bound + q.log2_bound;
    return out;
  }

  Lin square(const Lin& p) {
    Lin out;
    out.terms[neuron(p, Activation::requ)] = 1.0;
    out.terms[neuron(combine(p, -1.0, p, 0.0), Activation::requ)] = 1.0;
    return out;
  }

  Lin carry(const Lin& p) {
    Lin out;
    out.terms[neuron(p, Activation::relu)] = 1.0;
    out.terms[neuron(combine(p, -1.0, p, 0.0), Activation::relu)] = -1.0;
    out.log2_bound = p.log2_bound;
    return out;
  }

  Layer finish() const {
    Layer l = Layer::zeros(rows_.size(), cols_, Activation::relu);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (auto [c, w] : rows_[r].terms) l.w(r, c) = w;
      l.bias[r] = rows_[r].bias;
      l.activations[r] = acts_[r];
    }
    return l;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::size_t cols_;
  std::vector<Lin> rows_;
  std::vector<Activation> acts_;
};

Layer output_layer(const Lin& v, std::size_t cols) {
  Layer out = Layer::zeros(1, cols, Activation::linear);
  for (auto [c, w] : v.terms) out.w(0, c) = w;
  out.bias[0] = v.bias;
  return out;
}

int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

int floor_log2(int n) {
  int k = 0;
  while ((2 << k) <= n) ++k;
  return k;
}

std::string alpha_str(std::span<const int> alpha) {
  std::string s;
  for (std::size_t j = 0; j < alpha.size(); ++j) s += (j ? "," : "") + std::to_string(alpha[j]);
  return s;
}

// Monomial with `chains` partial products absorbing one factor per layer, then a pairwise tree.
Network monomial_with_chains(std::span<const int> alpha, int chains, std::string provenance) {
  const std::size_t d = alpha.size();
  std::vector<std::size_t> factors;
  for (std::size_t j = 0; j < d; ++j) {
    if (alpha[j] < 0) throw InvalidInput("monomial exponents must be non-negative");
    for (int e = 0; e < alpha[j]; ++e) factors.push_back(j);
  }
  const int k = static_cast<int>(factors.size());
  if (k == 0) {
    Layer out = Layer::zeros(1, d, Activation::linear);
    out.bias[0] = 1.0;
    return Network(d, {out}, std::move(provenance));
  }
  if (k == 1) {
    Layer out = Layer::zeros(1, d, Activation::linear);
    out.w(0, factors[0]) = 1.0;
    return Network(d, {out}, std::move(provenance));
  }

  const int C = std::clamp(chains, 1, (k + 1) / 2);
  // Balanced split of the factor list: chain c takes a contiguous run.
  std::vector<std::vector<std::size_t>> runs(static_cast<std::size_t>(C));
  for (int c = 0, pos = 0; c < C; ++c) {
    const int len = k / C + (c < k % C ? 1 : 0);
    runs[static_cast<std::size_t>(c)].assign(factors.begin() + pos, factors.begin() + pos + len);
    pos += len;
  }
  std::size_t chain_depth = 0;
  for (const auto& r : runs) chain_depth = std::max(chain_depth, r.size() - 1);

  std::vector<Layer> layers;
  std::vector<Lin> x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = input(j);
  std::vector<Lin> value(runs.size());
  std::size_t cols = d;
  for (std::size_t t = 0; t < chain_depth; ++t) {
    LayerPlan plan(cols);
    std::vector<Lin> next_value(runs.size());
    for (std::size_t c = 0; c < runs.size(); ++c) {
      const auto& run = runs[c];
      if (t == 0 && run.size() == 1)
        next_value[c] = plan.carry(x[run[0]]);
      else if (t == 0)
        next_value[c] = plan.product(x[run[0]], x[run[1]]);
      else if (t + 1 < run.size())
        next_value[c] = plan.product(value[c], x[run[t + 1]]);
      else
        next_value[c] = plan.carry(value[c]);
    }
    // Carry only the coordinates still needed by later layers.
    std::vector<Lin> next_x(d);
    for (std::size_t j = 0; j < d; ++j) {
      bool needed = false;
      for (const auto& run : runs)
        for (std::size_t p = t + 2; p < run.size(); ++p) needed = needed || run[p] == j;
      if (needed) next_x[j] = plan.carry(x[j]);
    }
    layers.push_back(plan.finish());
    cols = plan.size();
    value = std::move(next_value);
    x = std::move(next_x);
  }

  while (value.size() > 1) {
    LayerPlan plan(cols);
    std::vector<Lin> next;
    for (std::size_t c = 0; c + 1 < value.size(); c += 2) next.push_back(plan.product(value[c], value[c + 1]));
    if (value.size() % 2) next.push_back(plan.carry(value.back()));
    layers.push_back(plan.finish());
    cols = plan.size();
    value = std::move(next);
  }
  layers.push_back(output_layer(value[0], cols));
  return Network(d, std::move(layers), std::move(provenance));
}

Network scalar_requ_net(std::size_t d, const std::function<Lin(LayerPlan&, const std::vector<Lin>&)>& body,
                        std::string provenance) {
  std::vector<Lin> x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = input(j);
  LayerPlan plan(d);
  const Lin v = body(plan, x);
  return Network(d, {plan.finish(), output_layer(v, plan.size())}, std::move(provenance));
}

// t -> sum_{i<A} s(4K t - 4i - 1/2), with s = 2g^2(u) - 2g^2(1-u) + 2g^2(3-u) - 2g^2(u-2) and
// g = sigma(u) - sigma(u - 1/2).
Network bump_sum(int K, int A) {
  Layer clampl = Layer::zeros(8 * static_cast<std::size_t>(A), 1, Activation::relu);
  Layer sq = Layer::zeros(8 * static_cast<std::size_t>(A), 8 * static_cast<std::size_t>(A), Activation::requ);
  Layer out = Layer::zeros(1, 8 * static_cast<std::size_t>(A), Activation::linear);
  const double slope[4] = {1.0, -1.0, -1.0, 1.0};
  const double offset[4] = {0.0, 1.0, 3.0, -2.0};
  const double sign[4] = {2.0, -2.0, 2.0, -2.0};
  for (int i = 0; i < A; ++i) {
    const double shift = -4.0 * i - 0.5;
    for (std::size_t a = 0; a < 4; ++a) {
      // argument u_a = slope * (4K t + shift) + offset
      const std::size_t base = 8 * static_cast<std::size_t>(i) + 2 * a;
      const double w = slope[a] * 4.0 * K;
      const double b = slope[a] * shift + offset[a];
      clampl.w(base, 0) = w;
      clampl.bias[base] = b;
      clampl.w(base + 1, 0) = w;
      clampl.bias[base + 1] = b - 0.5;
      sq.w(base, base) = 1.0;
      sq.w(base, base + 1) = -1.0;
      sq.w(base + 1, base) = -1.0;
      sq.w(base + 1, base + 1) = 1.0;
      out.w(0, base) = sign[a];
      out.w(0, base + 1) = sign[a];
    }
  }
  return Network(1, {clampl, sq, out}, "requ.bump_sum(K=" + std::to_string(K) + ",A=" + std::to_string(A) + ")");
}

}  // namespace

Network exact_square() {
  return scalar_requ_net(1, [](LayerPlan& p, const std::vector<Lin>& x) { return p.square(x[0]); },
                         "requ.square");
}

Network exact_product() {
  return scalar_requ_net(2, [](LayerPlan& p, const std::vector<Lin>& x) { return p.product(x[0], x[1]); },
                         "requ.product");
}

Network build_exact_monomial(std::span<const int> alpha, int N, int L) {
  if (N < 1 || L < 1) throw InvalidInput("monomial needs N, L >= 1");
  int deg = 0;
  for (int e : alpha) deg += e;
  const long long capacity = static_cast<long long>(N) * L + (1LL << floor_log2(N));
  if (capacity < deg)
    throw InvalidInput("exact monomial infeasible: NL + 2^floor(log2 N) = " + std::to_string(capacity) +
                       " < |alpha| = " + std::to_string(deg));
  const auto d = static_cast<std::size_t>(alpha.size());
  const Budget b{static_cast<std::size_t>(4 * N) + 2 * d,
                 static_cast<std::size_t>(L + ceil_log2(N)), Budget::Mode::enforce};
  const Network net = monomial_with_chains(alpha, N,
                                           "requ.monomial(alpha=" + alpha_str(alpha) + ";N=" +
                                               std::to_string(N) + ",L=" + std::to_string(L) + ")");
  return Network(net.input_dim(), net.layers(), net.provenance(), b);
}

Network exact_monomial(std::span<const int> alpha) {
  int deg = 0;
  for (int e : alpha) deg += e;
  return monomial_with_chains(alpha, std::max(1, (deg + 1) / 2), "requ.monomial(alpha=" + alpha_str(alpha) + ")");
}

Network build_exact_polynomial(std::span<const Monomial> terms, int d, int N, int L) {
  if (terms.empty()) throw InvalidInput("polynomial needs at least one term");
  if (N < 1 || L < 1) throw InvalidInput("polynomial needs N, L >= 1");
  const int J = static_cast<int>(terms.size());
  int maxdeg = 0;
  for (const Monomial& t : terms) {
    if (static_cast<int>(t.alpha.size()) != d) throw InvalidInput("polynomial term has the wrong dimension");
    int deg = 0;
    for (int e : t.alpha) deg += e;
    maxdeg = std::max(maxdeg, deg);
  }
  bool feasible = false;
  for (int b = 1; b <= L && !feasible; ++b) {
    const double slack = (L - 2.0 * b - b * std::log2(static_cast<double>(N))) * N;
    feasible = slack >= static_cast<double>(b) * maxdeg;  // a = ceil(J/b) always satisfies ab >= J
  }
  if (!feasible)
    throw InvalidInput("exact polynomial infeasible: no b with (L - 2b - b log2 N) N >= b max|alpha| = " +
                       std::to_string(maxdeg) + " for J = " + std::to_string(J) + " terms");
  std::vector<Network> parts;
  for (const Monomial& t : terms) parts.push_back(exact_monomial(t.alpha));
  const Network stacked = parallel(parts);
  std::vector<double> coeff;
  for (const Monomial& t : terms) coeff.push_back(t.coeff);
  const double zero[1] = {0.0};
  return post_affine(stacked, 1, coeff, zero)
      .with_provenance("requ.polynomial(J=" + std::to_string(J) + ",d=" + std::to_string(d) + ",N=" +
                       std::to_string(N) + ",L=" + std::to_string(L) + ")");
}

Network build_exact_poly(const PolySpec& spec, int N, int L, int d) {
  switch (spec.kind) {
    case PolyKind::square:
      return exact_square();
    case PolyKind::product:
      return exact_product();
    case PolyKind::monomial:
      if (static_cast<int>(spec.alpha.size()) != d) throw InvalidInput("alpha has the wrong dimension");
      return build_exact_monomial(spec.alpha, N, L);
    case PolyKind::polynomial:
      return build_exact_polynomial(spec.terms, d, N, L);
  }
  throw InvalidInput("unknown polynomial kind");
}

double s_bump(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x <= 0.5) return 2.0 * x * x;
  if (x <= 1.0) return 1.0 - 2.0 * (x - 1.0) * (x - 1.0);
  if (x <= 2.0) return 1.0;
  if (x <= 2.5) return 1.0 - 2.0 * (x - 2.0) * (x - 2.0);
  return 2.0 * (x - 3.0) * (x - 3.0);
}

double ds_bump(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x <= 0.5) return 4.0 * x;
  if (x <= 1.0) return -4.0 * (x - 1.0);
  if (x <= 2.0) return 0.0;
  if (x <= 2.5) return -4.0 * (x - 2.0);
  return 4.0 * (x - 3.0);
}

double d2s_bump(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x < 0.5) return 4.0;
  if (x < 1.0) return -4.0;
  if (x <= 2.0) return 0.0;
  if (x < 2.5) return -4.0;
  return 4.0;
}

Jet1 SmoothPartitionKit::axis(int m_j, double x) const {
  const double K = shape.K;
  const double u = 4.0 * K * (m_j == 1 ? x : x + 0.5 / K);
  // Only the bump whose support [4i, 4i+3] contains u contributes.
  const double i = std::floor(u / 4.0);
  const double v = u - 4.0 * i;
  return {s_bump(v), 4.0 * K * ds_bump(v), 16.0 * K * K * d2s_bump(v)};
}

double SmoothPartitionKit::s_m(std::span<const int> m, std::span<const double> x) const {
  double p = 1.0;
  for (std::size_t j = 0; j < m.size(); ++j) p *= axis(m[j], x[j]).value;
  return p;
}

std::vector<double> SmoothPartitionKit::grad_s_m(std::span<const int> m, std::span<const double> x) const {
  const std::size_t n = m.size();
  std::vector<Jet1> jets;
  for (std::size_t j = 0; j < n; ++j) jets.push_back(axis(m[j], x[j]));
  std::vector<double> g(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i] *= i == j ? jets[j].d1 : jets[j].value;
  return g;
}

std::vector<double> SmoothPartitionKit::hess_s_m(std::span<const int> m, std::span<const double> x) const {
  const std::size_t n = m.size();
  std::vector<Jet1> jets;
  for (std::size_t j = 0; j < n; ++j) jets.push_back(axis(m[j], x[j]));
  std::vector<double> h(n * n, 1.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t j = 0; j < n; ++j) {
        if (a == b)
          h[a * n + b] *= j == a ? jets[j].d2 : jets[j].value;
        else
          h[a * n + b] *= (j == a || j == b) ? jets[j].d1 : jets[j].value;
      }
  return h;
}

SmoothPartitionKit build_smooth_partition(int N, int L, int d, std::optional<int> K_override) {
  if (N < 1 || L < 1 || d < 1) throw InvalidInput("smooth partition needs N, L, d >= 1");
  const long long capacity = static_cast<long long>(N) * L + (1LL << floor_log2(N));
  if (capacity < d)
    throw InvalidInput("smooth partition infeasible: NL + 2^floor(log2 N) = " + std::to_string(capacity) +
                       " < d = " + std::to_string(d));
  if (L < ceil_log2(N))
    throw InvalidInput("smooth partition infeasible: L = " + std::to_string(L) +
                       " < ceil(log2 N) = " + std::to_string(ceil_log2(N)));
  SmoothPartitionKit kit;
  kit.d = d;
  const relu::PartitionKit folds = relu::build_partition_nets(N, L, 1, 1, K_override);
  kit.shape = folds.shape;
  kit.colours = colourings(d);
  const int K = kit.shape.K;
  const Network chain = compose(folds.psi2, compose(folds.psi3, folds.psi4));
  const Network gt = compose(bump_sum(K, kit.shape.A), chain);
  const double shift1[1] = {1.0 / (8.0 * K)};
  const double shift2[1] = {1.0 / (2.0 * K) + 1.0 / (8.0 * K)};
  const Network axis[2] = {shift_inputs(gt, shift1), shift_inputs(gt, shift2)};
  std::optional<Network> prod;
  if (d >= 2) {
    const std::vector<int> ones(static_cast<std::size_t>(d), 1);
    prod = exact_monomial(ones);
  }
  for (const auto& m : kit.colours) {
    std::string prov = "requ.lambda_m(m=" + alpha_str(m) + ";K=" + std::to_string(K) + ")";
    if (d == 1) {
      kit.lambda.push_back(axis[m[0] - 1].with_provenance(prov));
      continue;
    }
    std::vector<Network> parts;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const std::size_t one[1] = {j};
      parts.push_back(select_inputs(axis[m[j] - 1], static_cast<std::size_t>(d), one));
    }
    kit.lambda.push_back(compose(*prod, parallel(parts)).with_provenance(prov));
  }
  return kit;
}

}  // namespace sobonet::requ
