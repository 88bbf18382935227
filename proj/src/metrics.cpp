#include "sobonet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sobonet/errors.hpp"
#include "sobonet/parallel.hpp"

namespace sobonet {

GridSpec GridSpec::standard(int d) {
  constexpr double third = 1.0 / 3.0;
  switch (d) {
    case 1:
      return {1, 1 << 14, third, {}};
    case 2:
      return {2, 512, third, {}};
    case 3:
      return {3, 64, third, {}};
    default:
      if (d < 1) throw InvalidInput("grid dimension must be positive");
      return {d, 16, third, {}};
  }
}

GridSpec GridSpec::refined() const {
  GridSpec g = *this;
  g.points *= 2;
  g.jitter = 2.0 * jitter - std::floor(2.0 * jitter);
  return g;
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= static_cast<std::size_t>(points);
  return n;
}

void GridSpec::point(std::size_t index, std::span<double> out) const {
  for (int j = d - 1; j >= 0; --j) {
    const std::size_t k = index % static_cast<std::size_t>(points);
    index /= static_cast<std::size_t>(points);
    const double lo = box.empty() ? 0.0 : box[j].lo;
    const double hi = box.empty() ? 1.0 : box[j].hi;
    out[j] = lo + (static_cast<double>(k) + jitter) * (hi - lo) / points;
  }
}

std::string GridSpec::label() const {
  return std::to_string(points) + "^" + std::to_string(d) + "@" + format_number(jitter);
}

Evaluator evaluator(const TargetFunction& f) {
  return [f](std::span<const double> x, int order) -> std::optional<Sample> {
    Sample s;
    s.value = f.value(x);
    if (order >= 1) s.gradient = f.gradient(x);
    if (order >= 2) s.hessian = f.hessian(x);
    return s;
  };
}

Evaluator evaluator(const PiecewisePoly& p) {
  return [p](std::span<const double> x, int order) -> std::optional<Sample> {
    if (!in_omega(p.m, p.K, x)) return std::nullopt;
    Sample s;
    s.value = eval_piecewise(p, x, 0)[0];
    if (order >= 1) s.gradient = eval_piecewise(p, x, 1);
    if (order >= 2) s.hessian = eval_piecewise(p, x, 2);
    return s;
  };
}

Evaluator evaluator(const Network& net) {
  return [net](std::span<const double> x, int order) -> std::optional<Sample> {
    Sample s;
    if (order == 0) {
      s.value = net.evaluate(x);
      return s;
    }
    Derivative dv = net.differentiate(x, order);
    s.value = dv.value;
    s.gradient = std::move(dv.gradient);
    s.hessian = std::move(dv.hessian);
    s.breakpoint = dv.breakpoint;
    return s;
  };
}

double ErrorReport::at(int order) const {
  for (const auto& o : orders)
    if (o.order == order) return o.sup;
  throw InvalidInput("order " + std::to_string(order) + " was not measured");
}

double ErrorReport::sobolev() const {
  double v = 0.0;
  for (const auto& o : orders) v = std::max(v, o.sup);
  return v;
}

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v = std::max(v, std::abs(a[i] - b[i]));
  return v;
}

double order_error(const Sample& r, const Sample& a, int k) {
  if (k == 0) return std::abs(r.value - a.value);
  if (k == 1) return max_abs_diff(r.gradient, a.gradient);
  return max_abs_diff(r.hessian, a.hessian);
}

struct BlockMax {
  std::vector<double> sup;
  std::vector<std::size_t> arg;
  std::size_t discarded = 0;
  std::size_t outside = 0;
  std::size_t used = 0;
};

}  // namespace

std::optional<double> error_at(const Evaluator& reference, const Evaluator& approx, int k,
                               std::span<const double> x) {
  const auto r = reference(x, k);
  const auto a = approx(x, k);
  if (!r || !a) return std::nullopt;
  return order_error(*r, *a, k);
}

ErrorReport sup_error(const Evaluator& reference, const Evaluator& approx, int order,
                      const GridSpec& grid) {
  if (order < 0 || order > 2) throw UnsupportedOrder("error order must be 0, 1 or 2");
  const std::size_t n = grid.size();
  constexpr std::size_t block = 4096;
  std::vector<BlockMax> blocks((n + block - 1) / block);
  parallel_blocks(n, block, [&](std::size_t begin, std::size_t end) {
    BlockMax& bm = blocks[begin / block];
    bm.sup.assign(static_cast<std::size_t>(order) + 1, -1.0);
    bm.arg.assign(static_cast<std::size_t>(order) + 1, 0);
    std::vector<double> x(static_cast<std::size_t>(grid.d));
    for (std::size_t idx = begin; idx < end; ++idx) {
      grid.point(idx, x);
      const auto r = reference(x, order);
      const auto a = approx(x, order);
      if (!r || !a) {
        ++bm.outside;
        continue;
      }
      if (r->breakpoint || a->breakpoint) {
        ++bm.discarded;
        continue;
      }
      ++bm.used;
      for (int k = 0; k <= order; ++k) {
        const double e = order_error(*r, *a, k);
        if (e > bm.sup[k]) {
          bm.sup[k] = e;
          bm.arg[k] = idx;
        }
      }
    }
  });

  ErrorReport rep;
  rep.grid = grid;
  std::vector<double> sup(static_cast<std::size_t>(order) + 1, -1.0);
  std::vector<std::size_t> arg(sup.size(), 0);
  std::size_t used = 0;
  for (const BlockMax& bm : blocks) {
    rep.discarded += bm.discarded;
    rep.outside += bm.outside;
    used += bm.used;
    for (std::size_t k = 0; k < sup.size(); ++k)
      if (bm.sup[k] > sup[k]) {
        sup[k] = bm.sup[k];
        arg[k] = bm.arg[k];
      }
  }
  if (used == 0) throw InvalidInput("no usable grid samples for the error estimate");
  for (std::size_t k = 0; k < sup.size(); ++k) {
    OrderError oe;
    oe.order = static_cast<int>(k);
    oe.sup = sup[k];
    oe.argmax.resize(static_cast<std::size_t>(grid.d));
    grid.point(arg[k], oe.argmax);
    rep.orders.push_back(std::move(oe));
  }
  return rep;
}

ErrorReport sup_error(const TargetFunction& f, const Network& net, int order, const GridSpec& grid) {
  return sup_error(evaluator(f), evaluator(net), order, grid);
}

ErrorReport sup_error(const PiecewisePoly& p, const Network& net, int order, const GridSpec& grid) {
  return sup_error(evaluator(p), evaluator(net), order, grid);
}

CsvTable error_table(const ErrorReport& report) {
  CsvTable t;
  t.header = {"order", "sup_err"};
  for (int j = 0; j < report.grid.d; ++j) t.header.push_back("argmax_" + std::to_string(j));
  t.header.push_back("grid");
  t.header.push_back("discarded");
  for (const auto& o : report.orders) {
    std::vector<std::string> row{std::to_string(o.order), format_number(o.sup)};
    for (double v : o.argmax) row.push_back(format_number(v));
    row.push_back(report.grid.label());
    row.push_back(std::to_string(report.discarded));
    t.add(std::move(row));
  }
  return t;
}

std::vector<bool> activation_pattern(const Network& net, std::span<const double> x) {
  std::vector<bool> pattern;
  std::vector<double> cur(x.begin(), x.end()), next;
  const auto& layers = net.layers();
  for (std::size_t li = 0; li + 1 < layers.size(); ++li) {
    const Layer& l = layers[li];
    next.assign(l.rows, 0.0);
    for (std::size_t r = 0; r < l.rows; ++r) {
      double h = l.bias[r];
      for (std::size_t c = 0; c < l.cols; ++c) h += l.w(r, c) * cur[c];
      if (l.activations[r] != Activation::linear) pattern.push_back(h > 0.0);
      switch (l.activations[r]) {
        case Activation::relu:
          next[r] = h > 0.0 ? h : 0.0;
          break;
        case Activation::requ:
          next[r] = h > 0.0 ? h * h : 0.0;
          break;
        case Activation::linear:
          next[r] = h;
          break;
      }
    }
    cur.swap(next);
  }
  return pattern;
}

FdReport fd_check(const Network& net, std::span<const std::vector<double>> points, double h) {
  FdReport rep;
  const std::size_t d = net.input_dim();
  for (const auto& x : points) {
    const Derivative dv = net.differentiate(x, 1);
    bool flagged = dv.breakpoint;
    const auto base = activation_pattern(net, x);
    std::vector<double> deviations;
    for (std::size_t j = 0; j < d && !flagged; ++j) {
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      if (activation_pattern(net, xp) != base || activation_pattern(net, xm) != base) {
        flagged = true;
        break;
      }
      const double fd = (net.evaluate(xp) - net.evaluate(xm)) / (2.0 * h);
      deviations.push_back(std::abs(dv.gradient[j] - fd) / std::max(1.0, std::abs(dv.gradient[j])));
    }
    if (flagged) {
      ++rep.flagged;
      continue;
    }
    ++rep.checked;
    for (double v : deviations) rep.max_deviation = std::max(rep.max_deviation, v);
  }
  return rep;
}

RateFit rate_fit(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw InvalidInput("rate fit needs at least three (K, error) pairs");
  std::vector<double> lx, ly;
  for (const auto& [k, e] : pairs) {
    if (!(k > 0.0)) throw InvalidInput("rate fit needs positive K");
    if (!(e > 0.0))
      throw InvalidInput("rate fit got a non-positive error; the representation may be exact");
    lx.push_back(std::log(k));
    ly.push_back(std::log(e));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("rate fit needs at least two distinct K");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double norm_propagation(PropagationKind kind, const NormSet& s) {
  if (s.g_sup < 0 || s.g_semi < 0 || s.f_sup < 0 || s.f_semi < 0)
    throw InvalidInput("norms must be non-negative");
  switch (kind) {
    case PropagationKind::composition:
      return std::sqrt(static_cast<double>(s.d)) * s.m * std::max(s.g_sup, s.g_semi * s.f_semi);
    case PropagationKind::product:
      return s.g_sup * s.f_semi + s.f_sup * s.g_semi;
  }
  return 0.0;
}

}  // namespace sobonet
