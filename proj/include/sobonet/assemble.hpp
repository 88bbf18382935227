#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobonet/jet.hpp"
#include "sobonet/metrics.hpp"
#include "sobonet/network.hpp"
#include "sobonet/target.hpp"

namespace sobonet {

struct FormulaBudget {
  double width = 0.0;
  double depth = 0.0;
};

struct AssemblyReport {
  std::string kind;  // relu or requ
  int n = 2, N = 1, L = 1, d = 1;
  int K = 1;
  bool K_overridden = false;
  double coefficient_scale = 1.0;  // lookups cover [-scale, scale]
  double outer_bound = 0.0;        // domain half-width of the outer product
  std::map<std::string, BudgetReport> parts;
  BudgetReport final_budget;
  FormulaBudget formula_local;  // per-colour sub-network
  FormulaBudget formula_final;
  std::optional<ErrorReport> error;
};

nlohmann::json to_json(const AssemblyReport& r);

// Width and depth expressions for the relu (kind "relu") and requ (kind "requ") approximants.
FormulaBudget relu_local_formula(int n, int N, int L, int d);
FormulaBudget relu_final_formula(int n, int N, int L, int d);
FormulaBudget requ_local_formula(int n, int N, int L, int d);
FormulaBudget requ_final_formula(int n, int N, int L, int d);

struct AssembleOptions {
  std::optional<int> K_override;
  bool measure = true;
  std::optional<GridSpec> grid;  // defaults to GridSpec::standard(d)
  bool wide_step = false;
};

// Sub-networks of one colour, kept so callers can re-evaluate the assembly term by term.
struct ColourTerm {
  std::vector<int> m;
  Network partition;  // phi_m or lambda_m
  Network index;      // x -> linear cell index
  std::vector<Network> lookups;    // one per alpha, values in [0,1]
  std::vector<Network> monomials;  // one per alpha with |alpha| >= 1
  Network local;                   // psi_m or gamma_m
  Network summand;                 // outer(partition, local)
};

struct Assembly {
  Network net;
  AssemblyReport report;
  std::vector<MultiIndex> alphas;  // graded, |alpha| <= n-1
  Network inner_product;           // products inside the local nets
  Network outer_product;
  std::vector<ColourTerm> terms;   // lexicographic in m
};

Assembly build_relu_approximant(const TargetFunction& f, int n, int N, int L, int d,
                                const AssembleOptions& opts = {});
Assembly build_requ_approximant(const TargetFunction& f, int n, int N, int L, int d,
                                const AssembleOptions& opts = {});

// Sum over m of outer(partition_m(x), sum_alpha inner(c_alpha(x), x^alpha)) from the parts.
double evaluate_terms(const Assembly& a, std::span<const double> x);

}  // namespace sobonet
