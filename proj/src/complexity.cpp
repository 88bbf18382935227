#include "sobonet/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "sobonet/errors.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/rng.hpp"

namespace sobonet {

double warren_count(int M, int D, int W) {
  if (M < 1 || D < 1 || W < 1) throw InvalidInput("warren_count needs positive M, D, W");
  if (W > M) throw PreconditionError("warren_count needs W <= M, got W = " + std::to_string(W) + ", M = " + std::to_string(M));
  return 2.0 * std::pow(2.0 * std::numbers::e * M * D / W, W);
}

std::size_t capacity_u(const ArchSpec& arch) {
  std::size_t u = 0, prefix = 0;
  for (std::size_t w : arch.layer_parameters()) {
    prefix += w;
    u += prefix;
  }
  return u;
}

double vc_formula(std::size_t L, std::size_t U) {
  const double a = static_cast<double>(L + 1), b = static_cast<double>(L + 2);
  return a + static_cast<double>(U) * std::log2(2.0 * a * b * std::log2(a * b));
}

BoundReport vc_pdim_upper(const ArchSpec& arch) {
  BoundReport r;
  r.arch = arch;
  r.U = capacity_u(arch);
  r.vc_upper = vc_formula(arch.hidden_layers(), r.U);
  ArchSpec augmented = arch;
  augmented.widths.front() += 1;
  r.pdim_upper = vc_formula(augmented.hidden_layers(), capacity_u(augmented));
  return r;
}

std::size_t affine_pattern_count(std::span<const std::pair<double, double>> lines) {
  std::vector<double> knots;
  for (const auto& [u, v] : lines)
    if (u != 0.0) knots.push_back(-v / u);
  std::sort(knots.begin(), knots.end());
  std::vector<double> probes;
  if (knots.empty()) {
    probes.push_back(0.0);
  } else {
    probes.push_back(knots.front() - 1.0);
    for (std::size_t k = 0; k < knots.size(); ++k) {
      probes.push_back(knots[k]);
      if (k + 1 < knots.size()) probes.push_back(0.5 * (knots[k] + knots[k + 1]));
    }
    probes.push_back(knots.back() + 1.0);
  }
  std::set<std::vector<bool>> patterns;
  for (double a : probes) {
    std::vector<bool> p;
    for (const auto& [u, v] : lines) p.push_back(u * a + v > 0.0);
    patterns.insert(std::move(p));
  }
  return patterns.size();
}

std::size_t sampled_pattern_count(std::span<const Polynomial> family, std::size_t samples, std::uint64_t seed,
                                  double R) {
  if (family.empty()) return 1;
  if (family.size() > 64) throw InvalidInput("sampled_pattern_count supports at most 64 polynomials");
  const auto W = static_cast<std::size_t>(family.front().d);
  std::set<std::uint64_t> patterns;
  std::vector<double> a(W);
  for (std::size_t s = 0; s < samples; ++s) {
    CounterRng rng(stream_key(seed, {s}));
    for (double& v : a) v = rng.uniform(-R, R);
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < family.size(); ++k)
      if (family[k].value(a) > 0.0) bits |= std::uint64_t{1} << k;
    patterns.insert(bits);
  }
  return patterns.size();
}

std::vector<std::vector<double>> default_points(std::size_t d, std::size_t m, std::uint64_t seed) {
  std::vector<std::vector<double>> pts(m, std::vector<double>(d));
  CounterRng rng(stream_key(seed, {d, m, 0x706f696e74ULL}));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < d; ++k) pts[j][k] = d == 1 ? (j + 0.5) / static_cast<double>(m) : rng.uniform();
  return pts;
}

namespace {

// Sample s is uniform for even s; odd s flips random signs of sample s - 1.
std::vector<double> theta_sample(std::size_t P, std::size_t s, const ShatterConfig& cfg) {
  if (cfg.sampler == ThetaSampler::grid) {
    std::vector<double> theta(P);
    const std::size_t q = cfg.grid_levels;
    for (double& v : theta) {
      v = -cfg.R + 2.0 * cfg.R * static_cast<double>(s % q) / static_cast<double>(q - 1);
      s /= q;
    }
    return theta;
  }
  const std::size_t base = s & ~std::size_t{1};
  CounterRng rng(stream_key(cfg.seed, {base}));
  std::vector<double> theta(P);
  for (double& v : theta) v = rng.uniform(-cfg.R, cfg.R);
  if (s != base) {
    CounterRng flips(stream_key(cfg.seed, {s, 0x666c6970ULL}));
    for (double& v : theta)
      if (flips.next() & 1) v = -v;
  }
  return theta;
}

}  // namespace

ShatterInstance shatter_search(const ArchSpec& arch, std::span<const std::vector<double>> points, std::size_t i,
                               const ShatterConfig& cfg) {
  ShatterInstance inst;
  inst.points.assign(points.begin(), points.end());
  inst.coordinate = i;
  inst.config = cfg;
  const std::size_t m = points.size();
  if (m < 1) throw InvalidInput("shatter_search needs m >= 1");
  if (m > 30) throw InvalidInput("shatter_search supports m <= 30");
  if (i >= arch.input_dim()) throw InvalidInput("derivative coordinate out of range");
  for (const auto& x : points)
    if (x.size() != arch.input_dim()) throw InvalidInput("point dimension does not match the architecture");
  const std::size_t P = arch.parameter_count();
  const std::size_t full = std::size_t{1} << m;
  std::size_t samples = cfg.samples;
  if (cfg.sampler == ThetaSampler::grid) {
    if (cfg.grid_levels < 2) throw InvalidInput("grid sampler needs at least 2 levels");
    double cells = 1.0;
    for (std::size_t k = 0; k < P; ++k) cells *= static_cast<double>(cfg.grid_levels);
    if (cells < static_cast<double>(samples)) samples = static_cast<std::size_t>(cells);
  }

  std::set<std::uint32_t> found;
  constexpr std::size_t chunk = 4096, block = 256;
  for (std::size_t start = 0; start < samples && found.size() < full; start += chunk) {
    const std::size_t end = std::min(samples, start + chunk);
    std::vector<std::set<std::uint32_t>> local((end - start + block - 1) / block);
    parallel_blocks(end - start, block, [&](std::size_t b0, std::size_t b1) {
      auto& out = local[b0 / block];
      for (std::size_t s = start + b0; s < start + b1; ++s) {
        const Network net = arch_network(arch, theta_sample(P, s, cfg));
        std::uint32_t bits = 0;
        for (std::size_t j = 0; j < m; ++j)
          if (net.differentiate(points[j], 1).gradient[i] > 0.0) bits |= std::uint32_t{1} << j;
        out.insert(bits);
      }
    });
    for (const auto& s : local) found.insert(s.begin(), s.end());
    inst.samples_used = end;
  }
  inst.patterns_found = found.size();
  inst.shattered = inst.patterns_found == full;
  return inst;
}

std::size_t best_shattered(const ArchSpec& arch, std::size_t m_max, std::size_t i, const ShatterConfig& cfg) {
  std::size_t best = 0;
  for (std::size_t m = 1; m <= m_max; ++m) {
    const auto pts = default_points(arch.input_dim(), m, cfg.seed);
    if (shatter_search(arch, pts, i, cfg).shattered) best = m;
  }
  return best;
}

Jet bump_jet(std::span<const double> y, int i, int order) {
  const int d = static_cast<int>(y.size());
  const auto sp = jet_space(d, order);
  double r2 = 0.0;
  for (double v : y) r2 += v * v;
  const double t0 = 1.0 - 9.0 * r2;
  if (t0 <= 0.0 || 1.0 / t0 > 700.0) return Jet(sp, 0.0);
  Jet r(sp, 0.0);
  for (int j = 0; j < d; ++j) {
    const Jet v = Jet::variable(sp, static_cast<std::size_t>(j), y[static_cast<std::size_t>(j)]);
    r += v * v;
  }
  const Jet yi = Jet::variable(sp, static_cast<std::size_t>(i), y[static_cast<std::size_t>(i)]);
  return std::numbers::e * yi * exp(-reciprocal(1.0 - 9.0 * r));
}

std::vector<double> BumpGrid::centre(std::size_t theta) const {
  std::vector<double> c(static_cast<std::size_t>(d));
  for (int j = d - 1; j >= 0; --j) {
    c[static_cast<std::size_t>(j)] = (static_cast<double>(theta % static_cast<std::size_t>(M)) + 0.5) / M;
    theta /= static_cast<std::size_t>(M);
  }
  return c;
}

double BumpGrid::derivative(std::span<const int> alpha, std::span<const double> x) const {
  std::size_t theta = 0;
  std::vector<double> y(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const int k = std::clamp(static_cast<int>(std::floor(x[uj] * M)), 0, M - 1);
    theta = theta * static_cast<std::size_t>(M) + static_cast<std::size_t>(k);
    y[uj] = M * x[uj] - (k + 0.5);
  }
  const int deg = total_degree(alpha);
  const Jet g = bump_jet(y, i, deg);
  return std::pow(static_cast<double>(M), deg - n) * beta[theta] * g.derivative(alpha) / scale;
}

double BumpGrid::value(std::span<const double> x) const {
  const std::vector<int> zero(static_cast<std::size_t>(d), 0);
  return derivative(zero, x);
}

BumpGrid bump_grid(int M, int d, int n, std::span<const int> beta, int i) {
  if (M < 1 || d < 1 || n < 1) throw InvalidInput("bump_grid needs M, d, n >= 1");
  if (i < 0 || i >= d) throw InvalidInput("bump_grid coordinate out of range");
  std::size_t count = 1;
  for (int j = 0; j < d; ++j) count *= static_cast<std::size_t>(M);
  if (beta.size() != count) throw InvalidInput("beta needs one sign per centre");
  BumpGrid g;
  g.M = M;
  g.d = d;
  g.n = n;
  g.i = i;
  for (int b : beta) {
    if (b != 1 && b != -1) throw InvalidInput("beta entries must be +1 or -1");
    g.beta.push_back(b);
  }
  // C5: sampled max of all derivatives up to order n over the support, with a 10% margin.
  const int q = d == 1 ? 2001 : d == 2 ? 161 : 41;
  const auto alphas = multi_indices(d, n);
  double c5 = 0.0;
  std::vector<double> y(static_cast<std::size_t>(d));
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(q);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (int j = d - 1; j >= 0; --j) {
      y[static_cast<std::size_t>(j)] = -1.0 / 3.0 + (2.0 / 3.0) * static_cast<double>(r % q) / (q - 1);
      r /= static_cast<std::size_t>(q);
    }
    const Jet jt = bump_jet(y, i, n);
    for (const auto& a : alphas) c5 = std::max(c5, std::abs(jt.derivative(a)));
  }
  g.scale = 1.1 * c5;
  return g;
}

double rademacher_term(double pdim, double B, double M, LogBase base) {
  if (!(pdim > 0.0)) throw InvalidInput("pseudo-dimension must be positive");
  if (B < 0.0) throw InvalidInput("B must be non-negative");
  if (M < pdim) throw PreconditionError("sample count M must be at least the pseudo-dimension");
  const double arg = 2.0 * std::numbers::e * M / pdim;
  const double lg = base == LogBase::natural ? std::log(arg) : std::log2(arg);
  return 28.0 * B * std::sqrt(pdim / M) * std::sqrt(lg);
}

GenBound gen_bound(double pdim_phi, double pdim_dphi, double B, int d, double M, LogBase base) {
  GenBound g;
  g.rad_phi = rademacher_term(pdim_phi, B, M, base);
  g.rad_dphi = rademacher_term(pdim_dphi, B, M, base);
  g.gap = 4.0 * (B + 1.0) * (d * g.rad_dphi + g.rad_phi);
  return g;
}

}  // namespace sobonet
