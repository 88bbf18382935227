#include "sobonet/relu_build.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sobonet/combine.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/subdomain.hpp"

namespace sobonet::relu {
namespace {

constexpr int kMaxTeeth = 60;
constexpr std::size_t kValidationPoints = std::size_t{1} << 14;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Squares on B affine inputs, neuron k of block b stored at row k*B + b, so that equal
// blocks share an identical floating-point evaluation order.
Network square_blocks(int s, double a, std::size_t input_dim,
                      const std::vector<std::vector<double>>& in, const std::vector<double>& out,
                      std::string provenance) {
  if (s < 1) throw InvalidInput("teeth count must be at least 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("square range a must be positive");
  const std::size_t B = in.size();
  std::vector<Layer> layers;

  Layer first = Layer::zeros(4 * B, input_dim, Activation::relu);
  const double sign[4] = {1.0, -1.0, 1.0, -1.0};
  const double bias[4] = {0.0, 0.0, -0.5, -0.5};
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t r = k * B + b;
      for (std::size_t c = 0; c < input_dim; ++c) first.w(r, c) = sign[k] * in[b][c] / a;
      first.bias[r] = bias[k];
    }
  layers.push_back(first);

  // Coefficients of T and S over the previous layer's neuron types.
  std::vector<double> t_coef = {2.0, 2.0, -4.0, -4.0};
  std::vector<double> s_coef = {0.5, 0.5, 1.0, 1.0};
  for (int i = 2; i <= s; ++i) {
    const std::size_t prev_types = t_coef.size();
    Layer l = Layer::zeros(3 * B, prev_types * B, Activation::relu);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t k = 0; k < prev_types; ++k) {
        const std::size_t c = k * B + b;
        l.w(0 * B + b, c) = t_coef[k];
        l.w(1 * B + b, c) = t_coef[k];
        l.w(2 * B + b, c) = s_coef[k];
      }
    for (std::size_t b = 0; b < B; ++b) l.bias[1 * B + b] = -0.5;
    layers.push_back(l);
    const double q = std::ldexp(1.0, -2 * i);
    t_coef = {2.0, -4.0, 0.0};
    s_coef = {-2.0 * q, 4.0 * q, 1.0};
  }

  const std::size_t prev_types = s_coef.size();
  Layer last = Layer::zeros(1, prev_types * B, Activation::linear);
  for (std::size_t k = 0; k < prev_types; ++k)
    for (std::size_t b = 0; b < B; ++b) last.w(0, k * B + b) = out[b] * a * a * s_coef[k];
  layers.push_back(last);
  return Network(input_dim, std::move(layers), std::move(provenance));
}

// x -> sigma(x) carried through `depth` single-neuron layers.
Network relu_carry(std::size_t depth) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    Layer l = Layer::zeros(1, 1, Activation::relu);
    l.w(0, 0) = 1.0;
    layers.push_back(l);
  }
  Layer out = Layer::zeros(1, 1, Activation::linear);
  out.w(0, 0) = 1.0;
  layers.push_back(out);
  return Network(1, std::move(layers), "relu.carry");
}

Network constant_net(std::size_t input_dim, double value) {
  std::vector<double> a(input_dim, 0.0);
  std::vector<double> c{value};
  return linear_map(input_dim, 1, a, c).with_provenance("const(" + fmt(value) + ")");
}

Network projection(std::size_t input_dim, std::size_t j) {
  std::vector<double> a(input_dim, 0.0);
  a[j] = 1.0;
  std::vector<double> c{0.0};
  return linear_map(input_dim, 1, a, c).with_provenance("proj(" + std::to_string(j) + ")");
}

// W^{1,inf}(lo, hi) distance to a closed form, skipping breakpoints. The offset within each cell
// is irrational so that fine dyadic knots are not sampled only at their piece midpoints.
template <class F>
double w1_error_1d(const Network& net, double lo, double hi, F exact) {
  double err = 0.0;
  const double h = (hi - lo) / static_cast<double>(kValidationPoints);
  for (std::size_t k = 0; k < kValidationPoints; ++k) {
    const double x = lo + (static_cast<double>(k) + 0.6180339887498949) * h;
    const double xs[1] = {x};
    const Derivative dv = net.differentiate(xs, 1);
    if (dv.breakpoint) continue;
    const auto [v, dvx] = exact(x);
    err = std::max({err, std::abs(dv.value - v), std::abs(dv.gradient[0] - dvx)});
  }
  return err;
}

int start_teeth(int N, int L) {
  return static_cast<int>(std::ceil(L * std::log2(static_cast<double>(N)))) + 2;
}

// Step layers reading a scalar through `col` of a width-`cols` input; one ramp per level change.
struct Staircase {
  std::vector<double> ramp_w, ramp_b;
};

Staircase staircase(int levels, double spacing, double delta) {
  Staircase st;
  // Ramp k rises on [k*spacing - 3delta/4, k*spacing - delta/4], leaving delta/4 of slack on both sides.
  const double width = delta / 2.0;
  for (int k = 1; k < levels; ++k) {
    const double start = k * spacing - 0.75 * delta;
    st.ramp_w.push_back(1.0 / width);
    st.ramp_b.push_back(-start / width);
  }
  return st;
}

void check_delta(int K, double delta) {
  if (K < 1) throw InvalidInput("step needs K >= 1");
  if (!(delta > 0.0) || delta > 1.0 / (3.0 * K))
    throw InvalidInput("step gap delta must lie in (0, 1/(3K)], got " + fmt(delta));
}

// Stage mapping (y, idx) to (y - k*spacing, idx + weight*k) with k the staircase level of y.
// Each ramp saturates as sigma(1 - sigma(1 - v)), which is exactly 0 or 1 on the plateaus.
Network step_stage(int levels, double spacing, double delta, double weight) {
  const Staircase st = staircase(levels, spacing, delta);
  const std::size_t R = st.ramp_w.size();
  Layer a = Layer::zeros(R + 3, 2, Activation::relu);
  for (std::size_t k = 0; k < R; ++k) {
    a.w(k, 0) = -st.ramp_w[k];
    a.bias[k] = 1.0 - st.ramp_b[k];
  }
  a.w(R, 0) = 1.0;
  a.w(R + 1, 0) = -1.0;
  a.w(R + 2, 1) = 1.0;
  Layer b = Layer::zeros(R + 3, R + 3, Activation::relu);
  for (std::size_t k = 0; k < R; ++k) {
    b.w(k, k) = -1.0;
    b.bias[k] = 1.0;
  }
  for (std::size_t j = 0; j < 3; ++j) b.w(R + j, R + j) = 1.0;
  Layer out = Layer::zeros(2, R + 3, Activation::linear);
  out.w(0, R) = 1.0;
  out.w(0, R + 1) = -1.0;
  for (std::size_t k = 0; k < R; ++k) {
    out.w(0, k) = -spacing;
    out.w(1, k) = weight;
  }
  out.w(1, R + 2) = 1.0;
  return Network(2, {a, b, out}, "relu.step_stage");
}

// Prime factors of K grouped greedily into stage sizes no larger than cap (when possible).
std::vector<int> stage_digits(int K, int cap) {
  std::vector<int> primes;
  int r = K;
  for (int p = 2; p * p <= r; ++p)
    while (r % p == 0) {
      primes.push_back(p);
      r /= p;
    }
  if (r > 1) primes.push_back(r);
  std::sort(primes.rbegin(), primes.rend());
  std::vector<int> digits;
  for (int p : primes) {
    bool placed = false;
    for (int& dgt : digits)
      if (static_cast<long long>(dgt) * p <= cap) {
        dgt *= p;
        placed = true;
        break;
      }
    if (!placed) digits.push_back(p);
  }
  return digits;
}

// Zigzag with amplitude period on [0, pieces*period]: sum_k c_k sigma(t - k period).
Network triangle(double period, int pieces, std::string provenance) {
  Layer l = Layer::zeros(static_cast<std::size_t>(pieces), 1, Activation::relu);
  Layer out = Layer::zeros(1, static_cast<std::size_t>(pieces), Activation::linear);
  for (int k = 0; k < pieces; ++k) {
    l.w(static_cast<std::size_t>(k), 0) = 1.0;
    l.bias[static_cast<std::size_t>(k)] = -k * period;
    out.w(0, static_cast<std::size_t>(k)) = k == 0 ? 1.0 : (k % 2 ? -2.0 : 2.0);
  }
  return Network(1, {l, out}, std::move(provenance));
}

Network trapezoids(int K, int A) {
  Layer l = Layer::zeros(4 * static_cast<std::size_t>(A), 1, Activation::relu);
  Layer out = Layer::zeros(1, 4 * static_cast<std::size_t>(A), Activation::linear);
  const double kk = K;
  const double offs[4] = {1.0, 3.0, 5.0, 7.0};
  const double sgn[4] = {1.0, -1.0, -1.0, 1.0};
  for (int i = 0; i < A; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t r = 4 * static_cast<std::size_t>(i) + j;
      l.w(r, 0) = 1.0;
      l.bias[r] = -(i / kk + offs[j] / (8.0 * kk));
      out.w(0, r) = 4.0 * kk * sgn[j];
    }
  return Network(1, {l, out}, "relu.psi1(K=" + std::to_string(K) + ",A=" + std::to_string(A) + ")");
}

}  // namespace

Network build_teeth(int i) {
  if (i < 1) throw InvalidInput("teeth index must be at least 1");
  std::vector<Layer> layers;
  Layer first = Layer::zeros(4, 1, Activation::relu);
  first.w(0, 0) = 1.0;
  first.w(1, 0) = -1.0;
  first.w(2, 0) = 1.0;
  first.w(3, 0) = -1.0;
  first.bias[2] = -0.5;
  first.bias[3] = -0.5;
  layers.push_back(first);
  std::vector<double> t_coef = {2.0, 2.0, -4.0, -4.0};
  for (int k = 2; k <= i; ++k) {
    Layer l = Layer::zeros(2, t_coef.size(), Activation::relu);
    for (std::size_t c = 0; c < t_coef.size(); ++c) l.w(0, c) = l.w(1, c) = t_coef[c];
    l.bias[1] = -0.5;
    layers.push_back(l);
    t_coef = {2.0, -4.0};
  }
  Layer out = Layer::zeros(1, t_coef.size(), Activation::linear);
  for (std::size_t c = 0; c < t_coef.size(); ++c) out.w(0, c) = t_coef[c];
  layers.push_back(out);
  return Network(1, std::move(layers), "relu.teeth(i=" + std::to_string(i) + ")");
}

Network square_with_teeth(int s, double a) {
  return square_blocks(s, a, 1, {{1.0}}, {1.0},
                       "relu.square(s=" + std::to_string(s) + ",a=" + fmt(a) + ")");
}

double square_error(const Network& square, double a) {
  return w1_error_1d(square, -a, a, [](double x) { return std::pair{x * x, 2.0 * x}; });
}

int square_teeth_for(double a, double target, int start) {
  const double goal = std::max(target, precision_floor * a * a);
  double best = INFINITY;
  for (int s = std::max(1, start); s <= kMaxTeeth; ++s) {
    const double err = square_error(square_with_teeth(s, a), a);
    if (err <= goal) return s;
    best = std::min(best, err);
  }
  throw ConstructionFailed("square on (-" + fmt(a) + ", " + fmt(a) + ") could not reach W1 error " +
                           fmt(goal) + " with up to " + std::to_string(kMaxTeeth) +
                           " teeth; best measured " + fmt(best));
}

Network build_square(int N, int L, double a) {
  if (N < 1 || L < 1) throw InvalidInput("square needs N, L >= 1");
  const double target = a * a * std::pow(static_cast<double>(N), -L);
  const int s = square_teeth_for(a, target, start_teeth(N, L));
  return square_with_teeth(s, a).with_provenance("relu.square(N=" + std::to_string(N) + ",L=" +
                                                 std::to_string(L) + ",a=" + fmt(a) +
                                                 ",s=" + std::to_string(s) + ")");
}

Network product_with_teeth(int s, double a) {
  return square_blocks(s, a, 2, {{0.5, 0.5}, {0.5, 0.0}, {0.0, 0.5}}, {2.0, -2.0, -2.0},
                       "relu.product(s=" + std::to_string(s) + ",a=" + fmt(a) + ")");
}

Network build_product2_target(double a, double target, int start) {
  const int s = square_teeth_for(a, target / 6.0, start);
  return product_with_teeth(s, a);
}

Network build_product2(int N, int L, double a) {
  if (N < 1 || L < 1) throw InvalidInput("product needs N, L >= 1");
  const double target = 6.0 * a * a * std::pow(static_cast<double>(N), -L);
  const int s = square_teeth_for(a, target / 6.0, start_teeth(N, L));
  return product_with_teeth(s, a).with_provenance("relu.product2(N=" + std::to_string(N) + ",L=" +
                                                  std::to_string(L) + ",a=" + fmt(a) +
                                                  ",s=" + std::to_string(s) + ")");
}

Network multiprod_with_target(int s, double target, int start) {
  if (s < 2) throw InvalidInput("multiprod needs at least 2 factors, got " + std::to_string(s));
  const double eps = target / (2.0 * (s - 1));
  const Network p = build_product2_target(1.0, eps, start);
  const std::size_t D = p.depth();
  const auto us = static_cast<std::size_t>(s);

  auto stage = [&](std::size_t in_dim, std::size_t first, std::size_t second) {
    std::vector<Network> parts;
    const std::size_t idx[2] = {first, second};
    parts.push_back(select_inputs(p, in_dim, idx));
    const Network carry = relu_carry(D);
    for (std::size_t j = second + 1; j < in_dim; ++j) {
      const std::size_t one[1] = {j};
      parts.push_back(select_inputs(carry, in_dim, one));
    }
    return parallel(parts);
  };

  // First stage consumes x1 (plain) and x2; later stages read the carried sigma(x_k).
  Network net = stage(us, 0, 1);
  for (std::size_t k = 2; k < us; ++k) net = compose(stage(us - k + 1, 0, 1), net);
  return net.with_provenance("relu.multiprod(s=" + std::to_string(s) + ",target=" + fmt(target) + ")");
}

Network build_multiprod(int s, int N, int L) {
  if (s < 2) throw InvalidInput("multiprod needs at least 2 factors, got " + std::to_string(s));
  if (N < 1 || L < 1) throw InvalidInput("multiprod needs N, L >= 1");
  const double target = 10.0 * (s - 1) * std::pow(N + 1.0, -7.0 * s * L);
  return multiprod_with_target(s, target, start_teeth(N + 1, L))
      .with_provenance("relu.multiprod(s=" + std::to_string(s) + ",N=" + std::to_string(N) +
                       ",L=" + std::to_string(L) + ")");
}

Network build_monomial(std::span<const int> alpha, int N, int L, int s) {
  if (alpha.empty()) throw InvalidInput("monomial needs a non-empty multi-index");
  int deg = 0;
  for (int e : alpha) {
    if (e < 0) throw InvalidInput("monomial exponents must be non-negative");
    deg += e;
  }
  if (s == 0) s = deg;
  if (deg > s) throw InvalidInput("monomial degree exceeds s");
  const std::size_t d = alpha.size();
  std::string prov = "relu.monomial(alpha=";
  for (std::size_t j = 0; j < d; ++j) prov += (j ? "," : "") + std::to_string(alpha[j]);
  prov += ";N=" + std::to_string(N) + ",L=" + std::to_string(L) + ",s=" + std::to_string(s) + ")";
  if (deg == 0) return constant_net(d, 1.0).with_provenance(prov);
  std::vector<std::size_t> factors;
  for (std::size_t j = 0; j < d; ++j)
    for (int e = 0; e < alpha[j]; ++e) factors.push_back(j);
  if (deg == 1) return projection(d, factors[0]).with_provenance(prov);
  const double target = 10.0 * s * std::pow(N + 1.0, -7.0 * s * L);
  const Network mp = multiprod_with_target(deg, target, start_teeth(N + 1, L));
  return select_inputs(mp, d, factors).with_provenance(prov);
}

Network build_step(int K, double delta, StepMode mode, int max_levels) {
  check_delta(K, delta);
  const std::string prov = std::string("relu.step(K=") + std::to_string(K) + ",delta=" + fmt(delta) +
                           (mode == StepMode::wide ? ",wide)" : ",budget)");
  if (K == 1) return constant_net(1, 0.0).with_provenance(prov);
  if (mode == StepMode::wide) {
    const Staircase st = staircase(K, 1.0 / K, delta);
    const std::size_t R = st.ramp_w.size();
    Layer a = Layer::zeros(R, 1, Activation::relu);
    Layer b = Layer::zeros(R, R, Activation::relu);
    Layer out = Layer::zeros(1, R, Activation::linear);
    for (std::size_t k = 0; k < R; ++k) {
      a.w(k, 0) = -st.ramp_w[k];
      a.bias[k] = 1.0 - st.ramp_b[k];
      b.w(k, k) = -1.0;
      b.bias[k] = 1.0;
      out.w(0, k) = 1.0;
    }
    return Network(1, {a, b, out}, prov);
  }

  const std::vector<int> digits =
      stage_digits(K, max_levels > 0 ? max_levels : 4 * fold_shape_for_K(K).A + 3);
  double spacing = 1.0;
  int remaining = K;
  Network net;
  for (std::size_t j = 0; j < digits.size(); ++j) {
    spacing /= digits[j];
    remaining /= digits[j];
    Network st = step_stage(digits[j], spacing, delta, remaining);
    net = j == 0 ? st : compose(st, net);
  }
  const double lift[2] = {1.0, 0.0};
  const double zero2[2] = {0.0, 0.0};
  net = pre_affine(net, 1, lift, zero2);
  const double pick[2] = {0.0, 1.0};
  const double zero1[1] = {0.0};
  return post_affine(net, 1, pick, zero1).with_provenance(prov);
}

Network build_step_budget(int N, int L, int d, double delta) {
  const FoldShape f = fold_shape(N, L, d);
  const Network net = build_step(f.K, delta, StepMode::budget, 4 * N + 3);
  const Budget b{static_cast<std::size_t>(4 * N + 5), static_cast<std::size_t>(4 * L + 4),
                 Budget::Mode::enforce};
  return Network(1, net.layers(),
                 "relu.step_budget(N=" + std::to_string(N) + ",L=" + std::to_string(L) +
                     ",d=" + std::to_string(d) + ",K=" + std::to_string(f.K) + ")",
                 b);
}

Network build_pointfit(std::span<const double> values, int N, int L, int s) {
  if (values.empty()) throw InvalidInput("pointfit needs at least one value");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("pointfit values must lie in [0,1], got " + fmt(v));
  const std::string prov = "relu.pointfit(P=" + std::to_string(values.size()) + ",N=" +
                           std::to_string(N) + ",L=" + std::to_string(L) + ",s=" + std::to_string(s) + ")";
  const std::size_t P = values.size();
  if (P == 1) return constant_net(1, values[0]).with_provenance(prov);

  Layer ramps = Layer::zeros(P, 1, Activation::relu);
  for (std::size_t j = 0; j < P; ++j) {
    ramps.w(j, 0) = 1.0;
    ramps.bias[j] = -static_cast<double>(j);
  }
  // Hats centred at the integers; the end hats saturate outward.
  Layer hats = Layer::zeros(P, P, Activation::relu);
  hats.bias[0] = 1.0;
  hats.w(0, 0) = -1.0;
  hats.w(0, 1) = 1.0;
  for (std::size_t k = 1; k + 1 < P; ++k) {
    hats.w(k, k - 1) = 1.0;
    hats.w(k, k) = -2.0;
    hats.w(k, k + 1) = 1.0;
  }
  hats.w(P - 1, P - 2) = 1.0;
  hats.w(P - 1, P - 1) = -1.0;
  Layer clamp = Layer::zeros(2, P, Activation::relu);
  for (std::size_t k = 0; k < P; ++k) clamp.w(0, k) = clamp.w(1, k) = values[k];
  clamp.bias[1] = -1.0;
  Layer out = Layer::zeros(1, 2, Activation::linear);
  out.w(0, 0) = 1.0;
  out.w(0, 1) = -1.0;
  return Network(1, {ramps, hats, clamp, out}, prov);
}

int integer_root(long long v, int k) {
  if (v < 1 || k < 1) return 0;
  auto pow_le = [&](long long r) {
    long long p = 1;
    for (int i = 0; i < k; ++i) {
      if (p > v / r) return false;
      p *= r;
    }
    return p <= v;
  };
  long long r = static_cast<long long>(std::pow(static_cast<double>(v), 1.0 / k));
  r = std::max<long long>(r, 1);
  while (r > 1 && !pow_le(r)) --r;
  while (pow_le(r + 1)) ++r;
  return static_cast<int>(r);
}

FoldShape fold_shape(int N, int L, int d) {
  if (N < 1 || L < 1 || d < 1) throw InvalidInput("fold shape needs N, L, d >= 1");
  FoldShape f;
  f.A = integer_root(N, d);
  f.B = integer_root(static_cast<long long>(L) * L, d);
  f.l = integer_root(L, d);
  f.K = f.A * f.A * f.B;
  return f;
}

FoldShape fold_shape_for_K(int K) {
  if (K < 1) throw InvalidInput("K must be positive");
  FoldShape f;
  f.K = K;
  for (int a = 1; a * a <= K; ++a)
    if (K % (a * a) == 0) f.A = a;
  f.B = K / (f.A * f.A);
  f.l = 1;
  while ((f.l + 1) * (f.l + 1) < f.B + 1) ++f.l;
  return f;
}

double g1(int K, double x) {
  const double y = K * x;
  const double v = 4.0 * (y - std::floor(y));
  if (v <= 1.0) return v;
  if (v <= 2.0) return 1.0;
  if (v <= 3.0) return 3.0 - v;
  return 0.0;
}

double dg1(int K, double x) {
  const double y = K * x;
  const double v = 4.0 * (y - std::floor(y));
  if (v < 1.0) return 4.0 * K;
  if (v > 2.0 && v < 3.0) return -4.0 * K;
  return 0.0;
}

double PartitionKit::g(int m_j, double x) const {
  return m_j == 1 ? g1(shape.K, x) : g1(shape.K, x + 0.5 / shape.K);
}

double PartitionKit::dg(int m_j, double x) const {
  return m_j == 1 ? dg1(shape.K, x) : dg1(shape.K, x + 0.5 / shape.K);
}

double PartitionKit::g_m(std::span<const int> m, std::span<const double> x) const {
  double p = 1.0;
  for (std::size_t j = 0; j < m.size(); ++j) p *= g(m[j], x[j]);
  return p;
}

std::vector<double> PartitionKit::grad_g_m(std::span<const int> m, std::span<const double> x) const {
  std::vector<double> grad(m.size(), 1.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) grad[i] *= i == j ? dg(m[j], x[j]) : g(m[j], x[j]);
  return grad;
}

PartitionKit build_partition_nets(int N, int L, int n, int d, std::optional<int> K_override) {
  if (N < 1 || L < 1 || n < 1 || d < 1) throw InvalidInput("partition needs N, L, n, d >= 1");
  PartitionKit kit;
  kit.d = d;
  kit.shape = K_override ? fold_shape_for_K(*K_override) : fold_shape(N, L, d);
  const FoldShape& f = kit.shape;
  kit.psi4 = triangle(static_cast<double>(f.l + 1) / f.B, f.l + 1, "relu.psi4");
  kit.psi3 = triangle(1.0 / f.B, f.l + 1, "relu.psi3");
  kit.psi2 = triangle(1.0 / (static_cast<double>(f.A) * f.B), f.A, "relu.psi2");
  kit.psi1 = trapezoids(f.K, f.A);
  kit.psi = compose(kit.psi1, compose(kit.psi2, compose(kit.psi3, kit.psi4)))
                .with_provenance("relu.psi(K=" + std::to_string(f.K) + ")");
  kit.colours = colourings(d);

  const double kk = f.K;
  const double shift1[1] = {1.0 / (8.0 * kk)};
  const double shift2[1] = {5.0 / (8.0 * kk)};
  const Network axis[2] = {shift_inputs(kit.psi, shift1), shift_inputs(kit.psi, shift2)};
  std::optional<Network> mp;
  if (d >= 2) mp = build_multiprod(d, N, n * L);
  for (const auto& m : kit.colours) {
    std::string prov = "relu.phi_m(m=";
    for (int j = 0; j < d; ++j) prov += (j ? "," : "") + std::to_string(m[static_cast<std::size_t>(j)]);
    prov += ";K=" + std::to_string(f.K) + ")";
    if (d == 1) {
      kit.phi.push_back(axis[m[0] - 1].with_provenance(prov));
      continue;
    }
    std::vector<Network> parts;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const std::size_t one[1] = {j};
      parts.push_back(select_inputs(axis[m[j] - 1], static_cast<std::size_t>(d), one));
    }
    kit.phi.push_back(compose(*mp, parallel(parts)).with_provenance(prov));
  }
  return kit;
}

}  // namespace sobonet::relu
