#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sobonet/arch.hpp"
#include "sobonet/assemble.hpp"
#include "sobonet/complexity.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/local_poly.hpp"
#include "sobonet/metrics.hpp"
#include "sobonet/network.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/relu_build.hpp"
#include "sobonet/report.hpp"
#include "sobonet/requ_build.hpp"
#include "sobonet/subdomain.hpp"
#include "sobonet/target.hpp"
#include "sobonet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sobonet;

namespace {

constexpr const char* kVersion = "0.1.0";

// Reads {"seed": 7, "assemble": {"N": 2}} style documents. A run manifest is accepted too:
// its "parameters" member has the same shape.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    json j;
    try {
      is >> j;
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("parameters")) j = j["parameters"];
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    if (!j.is_object()) return;
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
  }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Globals {
  std::uint64_t seed = 7;
  std::size_t threads = 0;
  std::string out_dir = ".";
  std::string config;
};

// Artifacts written by one command plus the resolved parameters needed to replay it.
class Run {
 public:
  Run(const Globals& g, std::vector<std::string> path) : globals_(g), path_(std::move(path)), started_(utc_now()) {
    fs::create_directories(globals_.out_dir);
  }

  json& params() { return params_; }

  std::string file(const std::string& name) {
    const std::string p = (fs::path(globals_.out_dir) / name).string();
    artifacts_.push_back(p);
    return p;
  }

  void csv(const CsvTable& t, const std::string& name) { write_csv(t, file(name)); }
  void json_file(const json& j, const std::string& name) { write_json(j, file(name)); }

  void finish(const json& extra = json::object()) {
    json parameters = json::object();
    parameters["seed"] = globals_.seed;
    json* node = &parameters;
    for (const auto& p : path_) node = &(*node)[p];
    *node = params_;

    std::string name;
    for (const auto& p : path_) name += (name.empty() ? "" : "_") + p;
    const std::string manifest = (fs::path(globals_.out_dir) / (name + ".manifest.json")).string();
    json m;
    m["tool"] = "sobonet";
    m["version"] = kVersion;
    m["subcommand"] = name;
    m["parameters"] = parameters;
    m["threads"] = thread_count();
    m["artifacts"] = artifacts_;
    m["started"] = started_;
    m["finished"] = utc_now();
    if (!extra.empty()) m["metadata"] = extra;
    write_json(m, manifest);
  }

 private:
  Globals globals_;
  std::vector<std::string> path_;
  std::string started_;
  json params_ = json::object();
  std::vector<std::string> artifacts_;
};

Activation activation_arg(const std::string& s) {
  const Activation a = parse_activation(s);
  if (a == Activation::linear) throw InvalidInput("hidden activation must be relu or requ");
  return a;
}

std::string csv_list(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

void print_budget(const Network& net) {
  const BudgetReport r = budget_report(net);
  std::cout << "width=" << r.width << " depth=" << r.depth << " parameters=" << r.parameter_count << '\n';
}

// ---- build ----

struct BuildArgs {
  std::string kind;
  int N = 1, L = 1, s = 0, K = 4, d = 1, levels = 0;
  double a = 1.0, delta = 0.0;
  std::string mode = "wide";
  std::vector<int> alpha;
  std::vector<double> values;
  std::string out;
};

void add_build(CLI::App& app, BuildArgs& b) {
  app.add_option("--kind", b.kind, "builder")
      ->required()
      ->check(CLI::IsMember({"relu-teeth", "relu-square", "relu-product", "relu-multiprod", "relu-monomial",
                             "relu-step", "relu-pointfit", "relu-partition", "requ-square", "requ-product",
                             "requ-monomial"}));
  app.add_option("-N,--N", b.N, "width parameter")->check(CLI::PositiveNumber);
  app.add_option("-L,--L", b.L, "depth parameter")->check(CLI::PositiveNumber);
  app.add_option("-s,--s", b.s, "teeth count, product arity, or pointfit accuracy");
  app.add_option("-a,--a", b.a, "half-width of the input range");
  app.add_option("-K,--K", b.K, "step levels")->check(CLI::PositiveNumber);
  app.add_option("-d,--d", b.d, "input dimension")->check(CLI::PositiveNumber);
  app.add_option("--delta", b.delta, "step gap; 0 selects 1/(3K)");
  app.add_option("--mode", b.mode, "step construction")->check(CLI::IsMember({"wide", "budget"}));
  app.add_option("--levels", b.levels, "largest staircase in budget mode (0 = automatic)");
  app.add_option("--alpha", b.alpha, "multi-index")->delimiter(',');
  app.add_option("--values", b.values, "pointfit values in [0,1]")->delimiter(',');
  app.add_option("-o,--out", b.out, "output file name (default <kind>.json)");
}

int run_build(const Globals& g, const BuildArgs& b) {
  Run run(g, {"build"});
  run.params() = {{"kind", b.kind}, {"N", b.N},       {"L", b.L},       {"s", b.s},
                  {"a", b.a},       {"K", b.K},       {"d", b.d},       {"delta", b.delta},
                  {"mode", b.mode}, {"levels", b.levels}, {"alpha", b.alpha}, {"values", b.values}};
  const std::string out = b.out.empty() ? b.kind + ".json" : b.out;
  run.params()["out"] = out;
  std::vector<std::pair<std::string, Network>> nets;
  auto need_alpha = [&] {
    if (b.alpha.empty()) throw InvalidInput("--alpha is required for " + b.kind);
  };
  if (b.kind == "relu-teeth") {
    nets.emplace_back(out, relu::build_teeth(std::max(b.s, 1)));
  } else if (b.kind == "relu-square") {
    nets.emplace_back(out, b.s > 0 ? relu::square_with_teeth(b.s, b.a) : relu::build_square(b.N, b.L, b.a));
  } else if (b.kind == "relu-product") {
    nets.emplace_back(out, b.s > 0 ? relu::product_with_teeth(b.s, b.a) : relu::build_product2(b.N, b.L, b.a));
  } else if (b.kind == "relu-multiprod") {
    nets.emplace_back(out, relu::build_multiprod(std::max(b.s, 2), b.N, b.L));
  } else if (b.kind == "relu-monomial") {
    need_alpha();
    nets.emplace_back(out, relu::build_monomial(b.alpha, b.N, b.L, b.s));
  } else if (b.kind == "relu-step") {
    const double delta = b.delta > 0.0 ? b.delta : 1.0 / (3.0 * b.K);
    nets.emplace_back(out, b.mode == "budget"
                               ? relu::build_step(b.K, delta, relu::StepMode::budget, b.levels)
                               : relu::build_step(b.K, delta));
  } else if (b.kind == "relu-pointfit") {
    if (b.values.empty()) throw InvalidInput("--values is required for relu-pointfit");
    nets.emplace_back(out, relu::build_pointfit(b.values, b.N, b.L, std::max(b.s, 1)));
  } else if (b.kind == "relu-partition") {
    const relu::PartitionKit kit = relu::build_partition_nets(b.N, b.L, 2, b.d);
    const std::string stem = fs::path(out).stem().string();
    for (std::size_t c = 0; c < kit.colours.size(); ++c)
      nets.emplace_back(stem + "_m" + csv_list(kit.colours[c]) + ".json", kit.phi[c]);
  } else if (b.kind == "requ-square") {
    nets.emplace_back(out, requ::exact_square());
  } else if (b.kind == "requ-product") {
    nets.emplace_back(out, requ::exact_product());
  } else {
    need_alpha();
    nets.emplace_back(out, requ::build_exact_monomial(b.alpha, b.N, b.L));
  }
  for (const auto& [name, net] : nets) {
    save_network(net, run.file(name));
    std::cout << name << ": ";
    print_budget(net);
  }
  run.finish();
  return 0;
}

// ---- assemble ----

struct AssembleArgs {
  std::string kind = "relu";
  std::string target = "sin1d";
  int n = 2, N = 1, L = 1, d = 1;
  std::optional<int> K;
  bool no_measure = false;
  std::string prefix;
};

void add_assemble(CLI::App& app, AssembleArgs& a) {
  app.add_option("--kind", a.kind, "activation of the approximant")->check(CLI::IsMember({"relu", "requ"}));
  app.add_option("--target", a.target, "target function")->check(CLI::IsMember(target_names()));
  app.add_option("-n,--n", a.n, "smoothness order")->check(CLI::Range(2, 8));
  app.add_option("-N,--N", a.N, "width parameter")->check(CLI::PositiveNumber);
  app.add_option("-L,--L", a.L, "depth parameter")->check(CLI::PositiveNumber);
  app.add_option("-d,--d", a.d, "input dimension")->check(CLI::PositiveNumber);
  app.add_option("-K,--K", a.K, "override the cell count per axis")->check(CLI::PositiveNumber);
  app.add_flag("--no-measure", a.no_measure, "skip the grid error measurement");
  app.add_option("--prefix", a.prefix, "artifact name prefix (default assemble_<kind>)");
}

int run_assemble(const Globals& g, const AssembleArgs& a) {
  Run run(g, {"assemble"});
  run.params() = {{"kind", a.kind}, {"target", a.target}, {"n", a.n}, {"N", a.N},
                  {"L", a.L},       {"d", a.d},           {"no-measure", a.no_measure}};
  if (a.K) run.params()["K"] = *a.K;
  const TargetFunction f = make_target(a.target, a.n, a.d);
  AssembleOptions opts;
  opts.K_override = a.K;
  opts.measure = !a.no_measure;
  const Assembly asm_ = a.kind == "relu" ? build_relu_approximant(f, a.n, a.N, a.L, a.d, opts)
                                         : build_requ_approximant(f, a.n, a.N, a.L, a.d, opts);
  const std::string prefix = a.prefix.empty() ? "assemble_" + a.kind : a.prefix;
  run.params()["prefix"] = prefix;
  save_network(asm_.net, run.file(prefix + ".net.json"));
  run.json_file(to_json(asm_.report), prefix + ".report.json");
  std::cout << "K=" << asm_.report.K << ' ';
  print_budget(asm_.net);
  if (asm_.report.error)
    std::cout << "sobolev_error=" << format_number(asm_.report.error->sobolev())
              << " discarded=" << asm_.report.error->discarded << '\n';
  run.finish();
  return 0;
}

// ---- measure ----

struct MeasureArgs {
  std::string net;
  std::string target = "sin1d";
  int n = 2, order = 1, points = 0;
  std::string out = "measure.csv";
};

void add_measure(CLI::App& app, MeasureArgs& m) {
  app.add_option("--net", m.net, "network JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--target", m.target, "target function")->check(CLI::IsMember(target_names()));
  app.add_option("-n,--n", m.n, "target smoothness (sets its normalization)")->check(CLI::PositiveNumber);
  app.add_option("--order", m.order, "highest derivative order")->check(CLI::Range(0, 2));
  app.add_option("--points", m.points, "grid points per axis (0 = standard)");
  app.add_option("-o,--out", m.out, "CSV file name");
}

int run_measure(const Globals& g, const MeasureArgs& m) {
  Run run(g, {"measure"});
  run.params() = {{"net", m.net}, {"target", m.target}, {"n", m.n}, {"order", m.order}, {"points", m.points},
                  {"out", m.out}};
  const Network net = load_network(m.net);
  const TargetFunction f = make_target(m.target, m.n, static_cast<int>(net.input_dim()));
  GridSpec grid = GridSpec::standard(f.d);
  if (m.points > 0) grid.points = m.points;
  const ErrorReport r = sup_error(f, net, m.order, grid);
  const CsvTable t = error_table(r);
  run.csv(t, m.out);
  std::cout << t.str();
  run.finish();
  return 0;
}

// ---- approx ----

struct ApproxArgs {
  std::string target = "sin1d";
  int K = 8, n = 2, order = 1;
  std::vector<int> m;
  std::string out = "approx.json";
};

void add_approx(CLI::App& app, ApproxArgs& a) {
  app.add_option("--target", a.target, "target function")->check(CLI::IsMember(target_names()));
  app.add_option("-K,--K", a.K, "cells per axis")->check(CLI::PositiveNumber);
  app.add_option("--m", a.m, "colour in {1,2}^d (default all ones)")->delimiter(',');
  app.add_option("-n,--n", a.n, "smoothness order")->check(CLI::PositiveNumber);
  app.add_option("--order", a.order, "derivative order for the reported error")->check(CLI::Range(0, 2));
  app.add_option("-o,--out", a.out, "JSON file name");
}

int run_approx(const Globals& g, const ApproxArgs& a) {
  Run run(g, {"approx"});
  const TargetFunction f = make_target(a.target, a.n);
  std::vector<int> m = a.m.empty() ? std::vector<int>(static_cast<std::size_t>(f.d), 1) : a.m;
  run.params() = {{"target", a.target}, {"K", a.K}, {"m", m}, {"n", a.n}, {"order", a.order}, {"out", a.out}};
  const PiecewisePoly p = build_piecewise_approx(f, a.K, m, a.n);
  run.json_file(to_json(p), a.out);
  const ErrorReport r = sup_error(evaluator(f), evaluator(p), a.order, GridSpec::standard(f.d));
  std::cout << "cells=" << p.cells.size() << " coefficient_bound=" << format_number(coefficient_bound(a.n, f.d))
            << " sobolev_error=" << format_number(r.sobolev()) << '\n';
  run.finish();
  return 0;
}

// ---- sweep-rate ----

struct SweepArgs {
  std::string kind = "local";
  std::string target = "sin1d";
  int n = 3, L = 1, N = 2, order = -1;
  std::vector<int> Ns;
  std::vector<int> Ks;
  std::string out = "sweep_rate.csv";
};

void add_sweep(CLI::App& app, SweepArgs& s) {
  app.add_option("--kind", s.kind, "local polynomials or an assembled network")
      ->check(CLI::IsMember({"local", "relu", "requ"}));
  app.add_option("--target", s.target, "target function")->check(CLI::IsMember(target_names()));
  app.add_option("-n,--n", s.n, "smoothness order")->check(CLI::PositiveNumber);
  app.add_option("-N,--N", s.N, "width parameter when sweeping K")->check(CLI::PositiveNumber);
  app.add_option("-L,--L", s.L, "depth parameter")->check(CLI::PositiveNumber);
  app.add_option("--Ns", s.Ns, "width parameters to sweep")->delimiter(',');
  app.add_option("--Ks", s.Ks, "cell counts to sweep")->delimiter(',');
  app.add_option("--order", s.order, "derivative order (default 1 for relu, 2 for requ, n-1 for local)");
  app.add_option("-o,--out", s.out, "CSV file name");
}

int run_sweep(const Globals& g, const SweepArgs& s) {
  Run run(g, {"sweep-rate"});
  const TargetFunction f = make_target(s.target, s.n);
  const int order = s.order >= 0 ? s.order : s.kind == "relu" ? 1 : s.kind == "requ" ? 2 : std::min(s.n - 1, 2);
  run.params() = {{"kind", s.kind}, {"target", s.target}, {"n", s.n},   {"N", s.N},
                  {"L", s.L},       {"Ns", s.Ns},         {"Ks", s.Ks}, {"order", order}, {"out", s.out}};
  CsvTable t{{"K", "N", "L", "order", "sup_err"}, {}};
  std::vector<std::pair<double, double>> pairs;
  auto record = [&](int K, int N, double err) {
    t.add({std::to_string(K), std::to_string(N), std::to_string(s.L), std::to_string(order), format_number(err)});
    pairs.emplace_back(static_cast<double>(K), err);
  };
  if (s.kind == "local") {
    const std::vector<int> Ks = s.Ks.empty() ? std::vector<int>{4, 8, 16, 32} : s.Ks;
    const GridSpec grid = GridSpec::standard(f.d);
    for (int K : Ks) {
      double worst = 0.0;
      for (const auto& m : colourings(f.d)) {
        const PiecewisePoly p = build_piecewise_approx(f, K, m, s.n);
        worst = std::max(worst, sup_error(evaluator(f), evaluator(p), order, grid).at(order));
      }
      record(K, 0, worst);
    }
  } else {
    AssembleOptions opts;
    auto one = [&](int N, std::optional<int> K) {
      opts.K_override = K;
      const Assembly a = s.kind == "relu" ? build_relu_approximant(f, s.n, N, s.L, f.d, opts)
                                          : build_requ_approximant(f, s.n, N, s.L, f.d, opts);
      record(a.report.K, N, a.report.error->at(order));
    };
    if (!s.Ks.empty()) {
      for (int K : s.Ks) one(s.N, K);
    } else {
      for (int N : s.Ns.empty() ? std::vector<int>{1, 2, 4} : s.Ns) one(N, std::nullopt);
    }
  }
  run.csv(t, s.out);
  std::cout << t.str();
  json meta = json::object();
  if (pairs.size() >= 3) {
    const RateFit fit = rate_fit(pairs);
    meta["slope_in_K"] = fit.slope;
    meta["r2"] = fit.r2;
    std::cout << "slope=" << format_number(fit.slope) << " r2=" << format_number(fit.r2) << '\n';
  }
  run.finish(meta);
  return 0;
}

// ---- capacity ----

struct CapacityArgs {
  std::string arch = "1,1,1";
  std::string act = "relu";
  std::size_t m = 2, i = 0, samples = 100000, levels = 9;
  std::string sampler = "random";
  double R = 4.0;
  std::string out;
};

void add_capacity_common(CLI::App& app, CapacityArgs& c) {
  app.add_option("--arch", c.arch, "layer widths d,N_1,...,N_L,1")->required();
  app.add_option("--act", c.act, "hidden activation")->check(CLI::IsMember({"relu", "requ"}));
  app.add_option("-o,--out", c.out, "CSV file name");
}

int run_capacity_bound(const Globals& g, const CapacityArgs& c) {
  Run run(g, {"capacity", "bound"});
  run.params() = {{"arch", c.arch}, {"act", c.act}, {"out", c.out.empty() ? "capacity_bound.csv" : c.out}};
  const ArchSpec arch = ArchSpec::parse(c.arch, activation_arg(c.act));
  const BoundReport r = vc_pdim_upper(arch);
  CsvTable t{{"arch", "U", "vc_upper", "pdim_upper"}, {}};
  t.add({arch.str(), std::to_string(r.U), format_number(r.vc_upper), format_number(r.pdim_upper)});
  run.csv(t, c.out.empty() ? "capacity_bound.csv" : c.out);
  std::cout << "U=" << r.U << " vc_upper=" << format_number(r.vc_upper) << " pdim_upper=" << format_number(r.pdim_upper)
            << '\n';
  run.finish();
  return 0;
}

int run_capacity_shatter(const Globals& g, const CapacityArgs& c) {
  Run run(g, {"capacity", "shatter"});
  run.params() = {{"arch", c.arch}, {"act", c.act}, {"m", c.m}, {"i", c.i}, {"samples", c.samples},
                  {"sampler", c.sampler}, {"levels", c.levels}, {"R", c.R},
                  {"out", c.out.empty() ? "capacity_shatter.csv" : c.out}};
  const ArchSpec arch = ArchSpec::parse(c.arch, activation_arg(c.act));
  if (c.i >= arch.input_dim()) throw InvalidInput("--i must index an input coordinate");
  ShatterConfig cfg;
  cfg.sampler = c.sampler == "grid" ? ThetaSampler::grid : ThetaSampler::random;
  cfg.grid_levels = c.levels;
  cfg.samples = c.samples;
  cfg.seed = g.seed;
  cfg.R = c.R;
  const auto points = default_points(arch.input_dim(), c.m, g.seed);
  const ShatterInstance s = shatter_search(arch, points, c.i, cfg);
  const BoundReport bound = vc_pdim_upper(arch);
  CsvTable t{{"arch", "m", "i", "patterns_found", "patterns_needed", "shattered", "samples_used", "vc_upper"}, {}};
  t.add({arch.str(), std::to_string(c.m), std::to_string(c.i), std::to_string(s.patterns_found),
         std::to_string(std::size_t{1} << c.m), s.shattered ? "true" : "false", std::to_string(s.samples_used),
         format_number(bound.vc_upper)});
  run.csv(t, c.out.empty() ? "capacity_shatter.csv" : c.out);
  std::cout << t.str();
  run.finish();
  return 0;
}

// ---- train / gap-sweep ----

struct TrainArgs {
  std::string arch = "1,16,1";
  std::string act = "relu";
  std::string target = "sin1d";
  std::string loss = "h1";
  int n = 1;
  std::size_t M = 64, steps = 500, replicas = 20, grid_factor = 16;
  double rate = 0.05, decay = 0.999, clamp = 1.0;
  std::vector<std::size_t> Ms = {64, 128, 256, 512, 1024, 2048, 4096};
  std::string prefix;
};

void add_train_common(CLI::App& app, TrainArgs& t) {
  app.add_option("--arch", t.arch, "layer widths d,N_1,...,N_L,1");
  app.add_option("--act", t.act, "hidden activation")->check(CLI::IsMember({"relu", "requ"}));
  app.add_option("--target", t.target, "target function")->check(CLI::IsMember(target_names()));
  app.add_option("-n,--n", t.n, "target smoothness (sets its normalization)")->check(CLI::PositiveNumber);
  app.add_option("--loss", t.loss, "empirical loss")->check(CLI::IsMember({"h1", "l2"}));
  app.add_option("--steps", t.steps, "gradient descent steps");
  app.add_option("--rate", t.rate, "initial step size")->check(CLI::PositiveNumber);
  app.add_option("--decay", t.decay, "per-step rate multiplier")->check(CLI::Range(0.0, 1.0));
  app.add_option("--clamp", t.clamp, "bound B recorded with the risks");
  app.add_option("--grid-factor", t.grid_factor, "population grid points per axis relative to M^(1/d)")
      ->check(CLI::Range(16, 1 << 20));
  app.add_option("--prefix", t.prefix, "artifact name prefix");
}

TrainConfig train_config(const Globals& g, const TrainArgs& t) {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse(t.arch, activation_arg(t.act));
  cfg.target = make_target(t.target, t.n, static_cast<int>(cfg.arch.input_dim()));
  cfg.samples = t.M;
  cfg.loss = t.loss == "l2" ? LossKind::l2 : LossKind::h1;
  cfg.rate = t.rate;
  cfg.decay = t.decay;
  cfg.steps = t.steps;
  cfg.seed = g.seed;
  cfg.clamp = t.clamp;
  cfg.grid_factor = t.grid_factor;
  return cfg;
}

json train_params(const TrainArgs& t) {
  return {{"arch", t.arch},   {"act", t.act},     {"target", t.target}, {"n", t.n},
          {"loss", t.loss},   {"steps", t.steps}, {"rate", t.rate},     {"decay", t.decay},
          {"clamp", t.clamp}, {"grid-factor", t.grid_factor}};
}

int run_train(const Globals& g, const TrainArgs& t) {
  Run run(g, {"train"});
  run.params() = train_params(t);
  run.params()["M"] = t.M;
  const TrainConfig cfg = train_config(g, t);
  const std::string prefix = t.prefix.empty() ? "train" : t.prefix;
  run.params()["prefix"] = prefix;
  TrainResult r;
  try {
    r = train(cfg);
  } catch (const TrainingDiverged& e) {
    CsvTable traj{{"step", "R_S"}, {}};
    for (std::size_t k = 0; k < e.trajectory().size(); ++k)
      traj.add({std::to_string(k), format_number(e.trajectory()[k])});
    run.csv(traj, prefix + "_trajectory.csv");
    run.finish();
    throw;
  }
  CsvTable traj{{"step", "R_S"}, {}};
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) traj.add({std::to_string(k), format_number(r.trajectory[k])});
  run.csv(traj, prefix + "_trajectory.csv");
  CsvTable summary{{"M", "R_S", "R_D", "gap", "grid_points", "B"}, {}};
  summary.add({std::to_string(t.M), format_number(r.risk_sample), format_number(r.risk_population),
               format_number(r.gap), std::to_string(r.grid_points), format_number(t.clamp)});
  run.csv(summary, prefix + "_summary.csv");
  save_network(r.net, run.file(prefix + ".net.json"));
  std::cout << summary.str();
  run.finish({{"seconds", r.seconds}});
  return 0;
}

int run_gap(const Globals& g, const TrainArgs& t) {
  Run run(g, {"gap-sweep"});
  run.params() = train_params(t);
  run.params()["Ms"] = t.Ms;
  run.params()["replicas"] = t.replicas;
  const TrainConfig cfg = train_config(g, t);
  const std::string prefix = t.prefix.empty() ? "gap_sweep" : t.prefix;
  run.params()["prefix"] = prefix;
  const GapTable table = gap_experiment(cfg, t.Ms, t.replicas);
  run.csv(gap_csv(table), prefix + ".csv");
  const CsvTable summary = gap_summary_csv(table);
  run.csv(summary, prefix + "_summary.csv");
  std::cout << summary.str();
  json meta = {{"gap_definition", "R_D(theta_S) - R_S(theta_S)"},
               {"statistic", "median and IQR over replicas approximate the expectation over sample draws"}};
  if (table.slope) {
    meta["slope"] = *table.slope;
    meta["r2"] = *table.r2;
    std::cout << "slope=" << format_number(*table.slope) << " r2=" << format_number(*table.r2) << '\n';
  } else {
    std::cout << "slope=undefined (non-positive median)\n";
  }
  run.finish(meta);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev-norm network approximation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());

  Globals g;
  app.set_config("--config", "", "JSON config file or run manifest");
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--threads", g.threads, "worker threads (default SOBONET_THREADS or 1)");
  app.add_option("--out-dir", g.out_dir, "directory for artifacts and the run manifest");

  BuildArgs build_args;
  add_build(*app.add_subcommand("build", "build a single network")->configurable(), build_args);
  AssembleArgs assemble_args;
  add_assemble(*app.add_subcommand("assemble", "assemble a Sobolev approximant")->configurable(), assemble_args);
  MeasureArgs measure_args;
  add_measure(*app.add_subcommand("measure", "grid Sobolev error of a saved network")->configurable(), measure_args);
  ApproxArgs approx_args;
  add_approx(*app.add_subcommand("approx", "piecewise averaged Taylor polynomials")->configurable(), approx_args);
  SweepArgs sweep_args;
  add_sweep(*app.add_subcommand("sweep-rate", "error against resolution")->configurable(), sweep_args);

  CapacityArgs bound_args, shatter_args;
  CLI::App* capacity = app.add_subcommand("capacity", "VC and shattering experiments")->configurable();
  capacity->require_subcommand(1);
  CLI::App* bound = capacity->add_subcommand("bound", "closed-form VC and pseudo-dimension bounds")->configurable();
  add_capacity_common(*bound, bound_args);
  CLI::App* shatter = capacity->add_subcommand("shatter", "sampled shattering of derivative signs")->configurable();
  add_capacity_common(*shatter, shatter_args);
  shatter->add_option("--m", shatter_args.m, "number of points")->check(CLI::Range(1, 20));
  shatter->add_option("--i", shatter_args.i, "derivative coordinate");
  shatter->add_option("--samples", shatter_args.samples, "parameter samples");
  shatter->add_option("--sampler", shatter_args.sampler, "parameter sampler")->check(CLI::IsMember({"random", "grid"}));
  shatter->add_option("--levels", shatter_args.levels, "grid sampler levels per parameter");
  shatter->add_option("--R", shatter_args.R, "parameter box half-width")->check(CLI::PositiveNumber);

  TrainArgs train_args, gap_args;
  CLI::App* train_cmd = app.add_subcommand("train", "H1 training run")->configurable();
  add_train_common(*train_cmd, train_args);
  train_cmd->add_option("-M,--M", train_args.M, "sample count")->check(CLI::PositiveNumber);
  CLI::App* gap_cmd = app.add_subcommand("gap-sweep", "generalization gap against M")->configurable();
  add_train_common(*gap_cmd, gap_args);
  gap_cmd->add_option("--Ms", gap_args.Ms, "increasing sample counts")->delimiter(',');
  gap_cmd->add_option("--replicas", gap_args.replicas, "replicas per M")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g.threads > 0) set_thread_count(g.threads);
    for (const CLI::App* sub : app.get_subcommands()) {
      const std::string name = sub->get_name();
      if (name == "build") return run_build(g, build_args);
      if (name == "assemble") return run_assemble(g, assemble_args);
      if (name == "measure") return run_measure(g, measure_args);
      if (name == "approx") return run_approx(g, approx_args);
      if (name == "sweep-rate") return run_sweep(g, sweep_args);
      if (name == "capacity") return bound->parsed() ? run_capacity_bound(g, bound_args)
                                                    : run_capacity_shatter(g, shatter_args);
      if (name == "train") return run_train(g, train_args);
      if (name == "gap-sweep") return run_gap(g, gap_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
