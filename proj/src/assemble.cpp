#include "sobonet/assemble.hpp"

#include <algorithm>
#include <cmath>

#include "sobonet/combine.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/local_poly.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/relu_build.hpp"
#include "sobonet/requ_build.hpp"
#include "sobonet/subdomain.hpp"

namespace sobonet {
namespace {

enum class Kind { relu, requ };

std::string colour_str(std::span<const int> m) {
  std::string s;
  for (std::size_t j = 0; j < m.size(); ++j) s += (j ? "," : "") + std::to_string(m[j]);
  return s;
}

int floor_log2(int v) {
  int r = 0;
  while ((v >> (r + 1)) > 0) ++r;
  return r;
}

int ceil_log2(int v) {
  int r = 0;
  while ((1 << r) < v) ++r;
  return r;
}

// Cell index along one axis: exact integers on the cells of colour m_j.
Network axis_step(int m_j, int K, int N, bool wide) {
  const int levels = m_j == 1 ? K : K + 1;
  const double delta = 1.0 / (3.0 * levels);
  const Network st = wide ? relu::build_step(levels, delta, relu::StepMode::wide)
                          : relu::build_step(levels, delta, relu::StepMode::budget, 4 * N + 3);
  if (m_j == 1) return st;
  const double a[1] = {K / (K + 1.0)};
  const double c[1] = {0.5 / (K + 1.0)};
  return pre_affine(st, 1, a, c);
}

Network cell_index(std::span<const int> m, int K, int N, bool wide) {
  const std::size_t d = m.size();
  std::vector<Network> axes;
  std::vector<double> stride(d, 1.0);
  for (std::size_t j = d; j-- > 1;) stride[j - 1] = stride[j] * cells_per_axis(m[j], K);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t one[1] = {j};
    axes.push_back(select_inputs(axis_step(m[j], K, N, wide), d, one));
  }
  const double zero[1] = {0.0};
  return post_affine(parallel(axes), 1, stride, zero).with_provenance("cell_index(m=" + colour_str(m) + ")");
}

double power_of_two_at_least(double v) { return std::exp2(std::ceil(std::log2(v))); }

double grid_sup(const Network& net, int d) {
  const GridSpec g{d, d == 1 ? 4096 : d == 2 ? 128 : 24, 1.0 / 3.0, {}};
  std::vector<double> x(static_cast<std::size_t>(d));
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    g.point(k, x);
    s = std::max(s, std::abs(net.evaluate(x)));
  }
  return s;
}

Network relu_product_for(double a, double target) {
  const double per_square = std::max(target / 6.0, relu::precision_floor * a * a);
  const int start = std::max(1, static_cast<int>(std::floor(0.5 * std::log2(a * a / per_square))));
  return relu::build_product2_target(a, target, start);
}

struct LocalParts {
  ColourTerm term;
  double coefficient_max = 0.0;
  std::vector<std::vector<double>> coeffs;  // [alpha][cell]
};

Assembly assemble(Kind kind, const TargetFunction& f, int n, int N, int L, int d, const AssembleOptions& opts) {
  if (n < 2) throw InvalidInput("assembly needs n >= 2");
  if (N < 1 || L < 1 || d < 1) throw InvalidInput("assembly needs N, L, d >= 1");
  if (f.d != d) throw InvalidInput("target dimension " + std::to_string(f.d) + " does not match d = " + std::to_string(d));
  if (f.n < n - 1) throw InvalidInput("target provides too few derivatives for n = " + std::to_string(n));
  if (f.sobolev_bound > 1.0) throw InvalidInput("target must have declared Sobolev norm <= 1");
  if (kind == Kind::requ) {
    const long long capacity = static_cast<long long>(N) * L + (1LL << floor_log2(N));
    if (capacity < std::max(d, n))
      throw InvalidInput("requ assembly needs NL + 2^floor(log2 N) >= max{d, n}, got " + std::to_string(capacity));
    if (L < ceil_log2(N)) throw InvalidInput("requ assembly needs L >= ceil(log2 N)");
  }

  Assembly out;
  AssemblyReport& rep = out.report;
  rep.kind = kind == Kind::relu ? "relu" : "requ";
  rep.n = n;
  rep.N = N;
  rep.L = L;
  rep.d = d;
  const relu::FoldShape shape = opts.K_override ? relu::fold_shape_for_K(*opts.K_override) : relu::fold_shape(N, L, d);
  const int K = shape.K;
  rep.K = K;
  rep.K_overridden = opts.K_override.has_value();
  if (kind == Kind::relu) {
    rep.formula_local = relu_local_formula(n, N, L, d);
    rep.formula_final = relu_final_formula(n, N, L, d);
  } else {
    rep.formula_local = requ_local_formula(n, N, L, d);
    rep.formula_final = requ_final_formula(n, N, L, d);
  }

  out.alphas = multi_indices(d, n - 1);
  const std::size_t A = out.alphas.size();
  const std::vector<std::vector<int>> colours = colourings(d);

  std::vector<Network> partitions;
  if (kind == Kind::relu) {
    relu::PartitionKit kit = relu::build_partition_nets(N, L, n, d, opts.K_override);
    partitions = std::move(kit.phi);
  } else {
    requ::SmoothPartitionKit kit = requ::build_smooth_partition(N, L, d, opts.K_override);
    partitions = std::move(kit.lambda);
  }

  // Local polynomials on every colour, and one coefficient scale shared by all lookups.
  std::vector<LocalParts> locals(colours.size());
  parallel_tasks(colours.size(), [&](std::size_t c) {
    LocalParts& lp = locals[c];
    lp.term.m = colours[c];
    const PiecewisePoly pw = build_piecewise_approx(f, K, colours[c], n);
    lp.coeffs.assign(A, std::vector<double>(pw.cells.size()));
    for (std::size_t k = 0; k < A; ++k)
      for (std::size_t cell = 0; cell < pw.cells.size(); ++cell) {
        const double v = pw.cells[cell].poly.coefficient(out.alphas[k]);
        lp.coeffs[k][cell] = v;
        lp.coefficient_max = std::max(lp.coefficient_max, std::abs(v));
      }
  });
  double cmax = 0.0;
  for (const auto& lp : locals) cmax = std::max(cmax, lp.coefficient_max);
  const double C = cmax > 0.0 ? power_of_two_at_least(1.25 * cmax) : 1.0;
  rep.coefficient_scale = C;

  if (kind == Kind::relu) {
    const double a4 = std::max(C, 1.5);
    const double c3 = std::max(3.0 * C, 18.0);
    out.inner_product = relu_product_for(a4, 6.0 * c3 * c3 * std::pow(N + 1.0, -2.0 * n * (L + 1)));
  } else {
    out.inner_product = requ::exact_product();
  }

  std::vector<Network> monomials(A);
  parallel_tasks(A, [&](std::size_t k) {
    const MultiIndex& alpha = out.alphas[k];
    if (total_degree(alpha) == 0) return;
    monomials[k] = kind == Kind::relu ? relu::build_monomial(alpha, N, L) : requ::build_exact_monomial(alpha, N, L);
  });

  parallel_tasks(colours.size(), [&](std::size_t c) {
    LocalParts& lp = locals[c];
    ColourTerm& t = lp.term;
    t.partition = partitions[c];
    t.index = cell_index(t.m, K, N, opts.wide_step);
    std::vector<Network> fits;
    for (std::size_t k = 0; k < A; ++k) {
      std::vector<double> xi(lp.coeffs[k].size());
      for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = (lp.coeffs[k][p] + C) / (2.0 * C);
      t.lookups.push_back(relu::build_pointfit(xi, N, L, n));
      fits.push_back(t.lookups.back());
    }
    std::vector<double> scale(A * A, 0.0), shift(A, -C);
    for (std::size_t k = 0; k < A; ++k) scale[k * A + k] = 2.0 * C;
    const Network coef = post_affine(compose(parallel(fits), t.index), A, scale, shift);

    std::vector<Network> inner_parts{coef};
    std::vector<std::size_t> mono_slot(A, 0);
    for (std::size_t k = 0; k < A; ++k) {
      if (total_degree(out.alphas[k]) == 0) continue;
      mono_slot[k] = A + t.monomials.size();
      t.monomials.push_back(monomials[k]);
      inner_parts.push_back(monomials[k]);
    }
    const Network inner = parallel(inner_parts);
    const std::size_t width = inner.output_dim();
    std::vector<Network> products;
    for (std::size_t k = 0; k < A; ++k) {
      if (total_degree(out.alphas[k]) == 0) {
        std::vector<double> pick(width, 0.0);
        pick[k] = 1.0;
        const double zero[1] = {0.0};
        products.push_back(linear_map(width, 1, pick, zero));
      } else {
        const std::size_t idx[2] = {k, mono_slot[k]};
        products.push_back(select_inputs(out.inner_product, width, idx));
      }
    }
    const std::vector<double> ones(A, 1.0);
    const double zero[1] = {0.0};
    t.local = compose(post_affine(parallel(products), 1, ones, zero), inner)
                  .with_provenance(std::string(kind == Kind::relu ? "psi_m" : "gamma_m") + "(m=" + colour_str(t.m) + ")");
  });

  if (kind == Kind::relu) {
    double a = 0.0;
    for (const auto& lp : locals) a = std::max(a, grid_sup(lp.term.local, d));
    a += 1.0;
    rep.outer_bound = a;
    out.outer_product = relu_product_for(a, 6.0 * a * a * std::pow(N + 1.0, -7.0 * n * (L + 1)));
  } else {
    out.outer_product = requ::exact_product();
  }

  std::vector<Network> summands;
  for (auto& lp : locals) {
    ColourTerm& t = lp.term;
    const Network pair[2] = {t.partition, t.local};
    t.summand = compose(out.outer_product, parallel(pair));
    summands.push_back(t.summand);
    const std::string tag = "(m=" + colour_str(t.m) + ")";
    rep.parts["partition" + tag] = budget_report(t.partition);
    rep.parts["cell_index" + tag] = budget_report(t.index);
    rep.parts["local" + tag] = budget_report(t.local);
    if (!t.lookups.empty()) rep.parts["lookup" + tag] = budget_report(t.lookups.front());
    out.terms.push_back(std::move(t));
  }
  for (std::size_t k = 0; k < A; ++k)
    if (total_degree(out.alphas[k]) > 0) {
      std::string key = "monomial(alpha=";
      for (std::size_t j = 0; j < out.alphas[k].size(); ++j) key += (j ? "," : "") + std::to_string(out.alphas[k][j]);
      rep.parts[key + ")"] = budget_report(monomials[k]);
    }
  rep.parts["inner_product"] = budget_report(out.inner_product);
  rep.parts["outer_product"] = budget_report(out.outer_product);

  const std::vector<double> ones(summands.size(), 1.0);
  const double zero[1] = {0.0};
  out.net = post_affine(parallel(summands), 1, ones, zero)
                .with_provenance(rep.kind + ".approximant(f=" + f.name + ",n=" + std::to_string(n) + ",N=" +
                                 std::to_string(N) + ",L=" + std::to_string(L) + ",d=" + std::to_string(d) +
                                 ",K=" + std::to_string(K) + ")");
  rep.final_budget = budget_report(out.net);
  if (opts.measure)
    rep.error = sup_error(f, out.net, kind == Kind::relu ? 1 : 2, opts.grid ? *opts.grid : GridSpec::standard(d));
  return out;
}

double log2d(double v) { return std::log2(v); }

}  // namespace

FormulaBudget relu_local_formula(int n, int N, int L, int d) {
  return {25.0 * std::pow(n, d + 1) * (N + 1) * log2d(8.0 * N), 27.0 * n * n * (L + 2) * log2d(4.0 * L)};
}

FormulaBudget relu_final_formula(int n, int N, int L, int d) {
  return {(34.0 + d) * std::exp2(d) * std::pow(n, d + 1) * (N + 1) * log2d(8.0 * N),
          56.0 * d * d * n * n * (L + 1) * log2d(4.0 * L)};
}

FormulaBudget requ_local_formula(int n, int N, int L, int d) {
  return {28.0 * std::pow(n, d + 1) * (N + d) * log2d(8.0 * N), 11.0 * n * n * (L + 2) * log2d(4.0 * L)};
}

FormulaBudget requ_final_formula(int n, int N, int L, int d) {
  return {std::exp2(d + 6) * std::pow(n, d + 1) * (N + d) * log2d(8.0 * N), 15.0 * n * n * (L + 2) * log2d(4.0 * L)};
}

Assembly build_relu_approximant(const TargetFunction& f, int n, int N, int L, int d, const AssembleOptions& opts) {
  return assemble(Kind::relu, f, n, N, L, d, opts);
}

Assembly build_requ_approximant(const TargetFunction& f, int n, int N, int L, int d, const AssembleOptions& opts) {
  return assemble(Kind::requ, f, n, N, L, d, opts);
}

double evaluate_terms(const Assembly& a, std::span<const double> x) {
  const double C = a.report.coefficient_scale;
  double total = 0.0;
  for (const ColourTerm& t : a.terms) {
    const double p[1] = {t.index.evaluate(x)};
    double local = 0.0;
    std::size_t mono = 0;
    for (std::size_t k = 0; k < a.alphas.size(); ++k) {
      const double c = 2.0 * C * t.lookups[k].evaluate(p) - C;
      if (total_degree(a.alphas[k]) == 0) {
        local += c;
        continue;
      }
      const double args[2] = {c, t.monomials[mono++].evaluate(x)};
      local += a.inner_product.evaluate(args);
    }
    const double outer[2] = {t.partition.evaluate(x), local};
    total += a.outer_product.evaluate(outer);
  }
  return total;
}

nlohmann::json to_json(const AssemblyReport& r) {
  nlohmann::json parts = nlohmann::json::object();
  for (const auto& [name, b] : r.parts)
    parts[name] = {{"width", b.width}, {"depth", b.depth}, {"parameters", b.parameter_count}};
  nlohmann::json j = {
      {"kind", r.kind},
      {"n", r.n},
      {"N", r.N},
      {"L", r.L},
      {"d", r.d},
      {"K", r.K},
      {"K_overridden", r.K_overridden},
      {"coefficient_scale", r.coefficient_scale},
      {"outer_bound", r.outer_bound},
      {"parts", parts},
      {"final", {{"width", r.final_budget.width}, {"depth", r.final_budget.depth}, {"parameters", r.final_budget.parameter_count}}},
      {"formula_local", {{"width", r.formula_local.width}, {"depth", r.formula_local.depth}}},
      {"formula_final", {{"width", r.formula_final.width}, {"depth", r.formula_final.depth}}},
  };
  if (r.error) {
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& o : r.error->orders) errs.push_back({{"order", o.order}, {"sup_err", o.sup}, {"argmax", o.argmax}});
    j["error"] = {{"orders", errs}, {"grid", r.error->grid.label()}, {"discarded", r.error->discarded}};
  }
  return j;
}

}  // namespace sobonet
