#include "sobonet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sobonet/errors.hpp"
#include "sobonet/metrics.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/rng.hpp"

namespace sobonet {
namespace {

struct Act {
  double value, d1, d2;
};

Act activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? Act{z, 1.0, 0.0} : Act{0.0, 0.0, 0.0};
    case Activation::requ:
      return z > 0.0 ? Act{z * z, 2.0 * z, 2.0} : Act{0.0, 0.0, 0.0};
    case Activation::linear:
      break;
  }
  return {z, 1.0, 0.0};
}

// Buffers for one sample pass, reused across samples.
struct Workspace {
  std::vector<std::size_t> off;  // start of layer l's neurons; l = 0 is the input
  std::vector<std::size_t> param_off;
  std::vector<double> a, J, z, Z, u, t, d1, d2, abar, tbar;
  const Network* shape = nullptr;

  void prepare(const Network& net) {
    if (shape == &net) return;
    shape = &net;
    const auto& layers = net.layers();
    const std::size_t d = net.input_dim();
    off.assign(1, 0);
    off.push_back(d);
    param_off.assign(1, 0);
    for (const Layer& L : layers) {
      off.push_back(off.back() + L.rows);
      param_off.push_back(param_off.back() + L.weights.size() + L.bias.size());
    }
    const std::size_t total = off.back();
    a.assign(total, 0.0);
    J.assign(total * d, 0.0);
    t.assign(total, 0.0);
    z.assign(total, 0.0);
    Z.assign(total * d, 0.0);
    u.assign(total, 0.0);
    d1.assign(total, 0.0);
    d2.assign(total, 0.0);
    abar.assign(total, 0.0);
    tbar.assign(total, 0.0);
  }
};

// Forward values and input Jacobians, then reverse mode through both the value and the
// directional derivative along e = grad f - grad phi. Returns nullopt on an exact kink.
// Neuron k of layer l (l >= 1) lives at ws.off[l] + k; the input occupies [0, d).
std::optional<double> sample_pass(const Network& net, std::span<const double> x, double fval,
                                  std::span<const double> fgrad, LossKind kind, double scale,
                                  std::vector<double>* grad, Workspace& ws) {
  ws.prepare(net);
  const auto& layers = net.layers();
  const std::size_t d = net.input_dim();
  const std::size_t nl = layers.size();
  const auto& off = ws.off;
  std::fill(ws.J.begin(), ws.J.begin() + static_cast<std::ptrdiff_t>(d * d), 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    ws.a[i] = x[i];
    ws.J[i * d + i] = 1.0;
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const Layer& L = layers[l];
    const std::size_t in = off[l], outb = off[l + 1];
    for (std::size_t r = 0; r < L.rows; ++r) {
      const std::size_t o = outb + r;
      double h = L.bias[r];
      double* Zr = &ws.Z[o * d];
      std::fill(Zr, Zr + d, 0.0);
      const double* wr = &L.weights[r * L.cols];
      for (std::size_t c = 0; c < L.cols; ++c) {
        const double w = wr[c];
        h += w * ws.a[in + c];
        const double* Jc = &ws.J[(in + c) * d];
        for (std::size_t i = 0; i < d; ++i) Zr[i] += w * Jc[i];
      }
      if (h == 0.0 && L.activations[r] != Activation::linear) return std::nullopt;
      const Act ac = activate(L.activations[r], h);
      ws.z[o] = h;
      ws.a[o] = ac.value;
      ws.d1[o] = ac.d1;
      ws.d2[o] = ac.d2;
      double* Jr = &ws.J[o * d];
      for (std::size_t i = 0; i < d; ++i) Jr[i] = ac.d1 * Zr[i];
    }
  }
  const std::size_t top = off[nl];
  const double phi = ws.z[top];
  const double res = fval - phi;
  double e[8];
  std::vector<double> e_big;
  double* ev = e;
  if (d > 8) {
    e_big.resize(d);
    ev = e_big.data();
  }
  double loss = res * res;
  for (std::size_t i = 0; i < d; ++i) {
    ev[i] = fgrad[i] - ws.Z[top * d + i];
    if (kind == LossKind::h1) loss += ev[i] * ev[i];
  }
  if (!grad) return loss;

  // Tangents along e: u = Z e, t = J e.
  for (std::size_t i = 0; i < d; ++i) ws.t[i] = ev[i];
  for (std::size_t o = d; o < off.back(); ++o) {
    double s = 0.0, q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      s += ws.Z[o * d + i] * ev[i];
      q += ws.J[o * d + i] * ev[i];
    }
    ws.u[o] = s;
    ws.t[o] = q;
  }

  ws.abar[top] = -2.0 * res * scale;
  ws.tbar[top] = kind == LossKind::h1 ? -2.0 * scale : 0.0;
  for (std::size_t l = nl; l-- > 0;) {
    const Layer& L = layers[l];
    const std::size_t in = off[l], outb = off[l + 1];
    if (l > 0)
      for (std::size_t c = 0; c < L.cols; ++c) ws.abar[in + c] = ws.tbar[in + c] = 0.0;
    double* gw = grad->data() + ws.param_off[l];
    double* gb = gw + L.weights.size();
    for (std::size_t r = 0; r < L.rows; ++r) {
      const std::size_t o = outb + r;
      const double zb = ws.abar[o] * ws.d1[o] + ws.tbar[o] * ws.u[o] * ws.d2[o];
      const double ub = ws.tbar[o] * ws.d1[o];
      gb[r] += zb;
      const double* wr = &L.weights[r * L.cols];
      double* gr = gw + r * L.cols;
      for (std::size_t c = 0; c < L.cols; ++c) {
        gr[c] += zb * ws.a[in + c] + ub * ws.t[in + c];
        if (l > 0) {
          ws.abar[in + c] += wr[c] * zb;
          ws.tbar[in + c] += wr[c] * ub;
        }
      }
    }
  }
  return loss;
}

double rejitter(double v, std::size_t k) {
  const double step = 1e-9 * static_cast<double>(1 + (k % 7));
  return v + (v < 0.5 ? step : -step);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LossGrad h1_loss_grad(const Network& net, const TargetFunction& f, std::span<const std::vector<double>> samples,
                      LossKind kind) {
  if (samples.empty()) throw InvalidInput("loss needs at least one sample");
  LossGrad out;
  out.grad.assign(net.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(samples.size());
  Workspace ws;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    std::vector<double> x = samples[k];
    for (int attempt = 0;; ++attempt) {
      const std::vector<double> g = f.gradient(x);
      const auto l = sample_pass(net, x, f.value(x), g, kind, scale, &out.grad, ws);
      if (l) {
        out.loss += scale * *l;
        break;
      }
      if (attempt == 1) throw DomainError("sample " + std::to_string(k) + " sits on a breakpoint after re-jittering");
      for (double& v : x) v = rejitter(v, k);
      ++out.rejittered;
    }
  }
  return out;
}

double empirical_loss(const Network& net, const TargetFunction& f, std::span<const std::vector<double>> samples,
                      LossKind kind) {
  return h1_loss_grad(net, f, samples, kind).loss;
}

std::vector<double> initial_parameters(const ArchSpec& arch, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, {0x696e6974ULL}));
  std::vector<double> theta;
  for (std::size_t i = 1; i < arch.widths.size(); ++i) {
    const double bound = std::sqrt(1.0 / static_cast<double>(arch.widths[i - 1]));
    const std::size_t count = arch.widths[i] * arch.widths[i - 1] + arch.widths[i];
    for (std::size_t k = 0; k < count; ++k) theta.push_back(rng.uniform(-bound, bound));
  }
  return theta;
}

std::vector<std::vector<double>> draw_samples(std::size_t d, std::size_t M, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, {0x73616d70ULL, M}));
  std::vector<std::vector<double>> s(M, std::vector<double>(d));
  for (auto& x : s)
    for (double& v : x) {
      do v = rng.uniform();
      while (v == 0.0);
    }
  return s;
}

std::size_t population_grid(std::size_t d, std::size_t M, std::size_t factor) {
  const auto per_axis = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(M), 1.0 / static_cast<double>(d)) - 1e-9));
  return factor * std::max<std::size_t>(per_axis, 1);
}

double population_risk(const Network& net, const TargetFunction& f, std::size_t points_per_axis, LossKind kind) {
  const GridSpec grid{static_cast<int>(net.input_dim()), static_cast<int>(points_per_axis), 0.5, {}};
  const std::size_t n = grid.size();
  constexpr std::size_t block = 2048;
  std::vector<double> sums((n + block - 1) / block, 0.0);
  std::vector<std::size_t> used(sums.size(), 0);
  parallel_blocks(n, block, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> x(net.input_dim());
    Workspace ws;
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t k = b0; k < b1; ++k) {
      grid.point(k, x);
      const auto l = sample_pass(net, x, f.value(x), f.gradient(x), kind, 1.0, nullptr, ws);
      if (!l) continue;
      s += *l;
      ++c;
    }
    sums[b0 / block] = s;
    used[b0 / block] = c;
  });
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    total += sums[b];
    count += used[b];
  }
  if (count == 0) throw InvalidInput("population grid has no usable points");
  return total / static_cast<double>(count);
}

TrainResult train(const TrainConfig& cfg) {
  if (cfg.samples < 1) throw InvalidInput("training needs M >= 1");
  if (cfg.arch.widths.size() < 3) throw InvalidInput("training needs a valid architecture");
  if (static_cast<int>(cfg.arch.input_dim()) != cfg.target.d)
    throw InvalidInput("architecture input width does not match the target dimension");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> theta = initial_parameters(cfg.arch, cfg.seed);
  const auto samples = draw_samples(cfg.arch.input_dim(), cfg.samples, cfg.seed);
  TrainResult res;
  double rate = cfg.rate;
  for (std::size_t step = 0;; ++step) {
    const Network net = arch_network(cfg.arch, theta);
    const LossGrad lg = h1_loss_grad(net, cfg.target, samples, cfg.loss);
    res.trajectory.push_back(lg.loss);
    if (!std::isfinite(lg.loss) || lg.loss > 1e6)
      throw TrainingDiverged("training diverged at step " + std::to_string(step), res.trajectory);
    if (step == cfg.steps) {
      res.net = net;
      res.risk_sample = lg.loss;
      break;
    }
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= rate * lg.grad[k];
    rate *= cfg.decay;
  }
  res.grid_points = population_grid(cfg.arch.input_dim(), cfg.samples, cfg.grid_factor);
  res.risk_population = population_risk(res.net, cfg.target, res.grid_points, cfg.loss);
  res.gap = res.risk_population - res.risk_sample;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

GapTable gap_experiment(const TrainConfig& base, std::span<const std::size_t> Ms, std::size_t replicas) {
  if (Ms.empty()) throw InvalidInput("gap experiment needs at least one M");
  for (std::size_t k = 1; k < Ms.size(); ++k)
    if (Ms[k] <= Ms[k - 1]) throw InvalidInput("sample sizes must be increasing");
  if (replicas < 1) throw InvalidInput("gap experiment needs at least one replica");
  GapTable table;
  table.rows.resize(Ms.size() * replicas);
  parallel_tasks(table.rows.size(), [&](std::size_t task) {
    GapRow& row = table.rows[task];
    row.M = Ms[task / replicas];
    row.replica = task % replicas;
    TrainConfig cfg = base;
    cfg.samples = row.M;
    cfg.seed = stream_key(base.seed, {row.M, row.replica});
    try {
      const TrainResult r = train(cfg);
      row.risk_sample = r.risk_sample;
      row.risk_population = r.risk_population;
      row.gap = r.gap;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  std::vector<std::pair<double, double>> medians;
  bool positive = true;
  for (std::size_t k = 0; k < Ms.size(); ++k) {
    std::vector<double> gaps;
    for (std::size_t r = 0; r < replicas; ++r) {
      const GapRow& row = table.rows[k * replicas + r];
      if (row.error.empty()) gaps.push_back(row.gap);
    }
    GapSummary s;
    s.M = Ms[k];
    s.ok = gaps.size();
    if (!gaps.empty()) {
      s.median = quantile(gaps, 0.5);
      s.iqr = quantile(gaps, 0.75) - quantile(gaps, 0.25);
    }
    if (gaps.empty() || !(s.median > 0.0)) positive = false;
    medians.emplace_back(static_cast<double>(s.M), s.median);
    table.summary.push_back(s);
  }
  if (std::all_of(table.summary.begin(), table.summary.end(), [](const GapSummary& s) { return s.ok == 0; }))
    throw std::runtime_error("every replica of the gap experiment failed: " + table.rows.front().error);
  if (positive && medians.size() >= 3) {
    const RateFit fit = rate_fit(medians);
    table.slope = fit.slope;
    table.r2 = fit.r2;
  }
  return table;
}

CsvTable gap_csv(const GapTable& t) {
  CsvTable c;
  c.header = {"M", "replica", "R_S", "R_D", "gap"};
  for (const GapRow& r : t.rows) {
    if (!r.error.empty()) {
      c.add({std::to_string(r.M), std::to_string(r.replica), "nan", "nan", "nan"});
      continue;
    }
    c.add({std::to_string(r.M), std::to_string(r.replica), format_number(r.risk_sample),
           format_number(r.risk_population), format_number(r.gap)});
  }
  return c;
}

CsvTable gap_summary_csv(const GapTable& t) {
  CsvTable c;
  c.header = {"M", "median_gap", "iqr", "replicas_ok"};
  for (const GapSummary& s : t.summary)
    c.add({std::to_string(s.M), format_number(s.median), format_number(s.iqr), std::to_string(s.ok)});
  return c;
}

}  // namespace sobonet
