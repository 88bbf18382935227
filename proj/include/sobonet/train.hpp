#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sobonet/arch.hpp"
#include "sobonet/network.hpp"
#include "sobonet/report.hpp"
#include "sobonet/target.hpp"

namespace sobonet {

enum class LossKind { l2, h1 };

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as arch_parameters
  std::size_t rejittered = 0;
};

// (1/M) sum_i [|grad(f - phi)(x_i)|^2 + |(f - phi)(x_i)|^2]; the gradient term is dropped for l2.
LossGrad h1_loss_grad(const Network& net, const TargetFunction& f, std::span<const std::vector<double>> samples,
                      LossKind kind = LossKind::h1);
double empirical_loss(const Network& net, const TargetFunction& f, std::span<const std::vector<double>> samples,
                      LossKind kind = LossKind::h1);

struct TrainConfig {
  ArchSpec arch;
  TargetFunction target;
  std::size_t samples = 64;  // M
  LossKind loss = LossKind::h1;
  double rate = 0.05;
  double decay = 0.999;
  std::size_t steps = 500;
  std::uint64_t seed = 7;
  double clamp = 1.0;         // B, reported with the risks
  std::size_t grid_factor = 16;  // R_D grid points per axis relative to M^{1/d}
};

struct TrainResult {
  Network net;
  std::vector<double> trajectory;  // R_S before each step and after the last
  double risk_sample = 0.0;      // R_S at the final parameters
  double risk_population = 0.0;  // R_D estimate on a dense midpoint grid
  double gap = 0.0;
  std::size_t grid_points = 0;
  double seconds = 0.0;
};

std::vector<double> initial_parameters(const ArchSpec& arch, std::uint64_t seed);
std::vector<std::vector<double>> draw_samples(std::size_t d, std::size_t M, std::uint64_t seed);
// Midpoint quadrature of the loss over (0,1)^d.
double population_risk(const Network& net, const TargetFunction& f, std::size_t points_per_axis,
                       LossKind kind = LossKind::h1);
std::size_t population_grid(std::size_t d, std::size_t M, std::size_t factor);

TrainResult train(const TrainConfig& cfg);

struct GapRow {
  std::size_t M = 0;
  std::size_t replica = 0;
  double risk_sample = 0.0;
  double risk_population = 0.0;
  double gap = 0.0;
  std::string error;  // non-empty when the replica failed
};

struct GapSummary {
  std::size_t M = 0;
  double median = 0.0;
  double iqr = 0.0;
  std::size_t ok = 0;
};

struct GapTable {
  std::vector<GapRow> rows;
  std::vector<GapSummary> summary;
  std::optional<double> slope;  // log-log slope of the medians, when all are positive
  std::optional<double> r2;
};

// Replica r at sample size M trains with seed stream_key(base.seed, {M, r}).
GapTable gap_experiment(const TrainConfig& base, std::span<const std::size_t> Ms, std::size_t replicas);
CsvTable gap_csv(const GapTable& t);
CsvTable gap_summary_csv(const GapTable& t);

}  // namespace sobonet
