#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sobonet {

enum class Activation { relu, requ, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

// Dense affine map followed by a per-neuron activation.
struct Layer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;  // row-major
  std::vector<double> bias;
  std::vector<Activation> activations;

  static Layer zeros(std::size_t rows, std::size_t cols, Activation act);

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
  bool uniform() const;
};

struct Budget {
  enum class Mode { enforce, report };
  std::size_t width_bound = 0;
  std::size_t depth_bound = 0;
  Mode mode = Mode::report;
};

struct BudgetReport {
  std::size_t width = 0;
  std::size_t depth = 0;
  std::size_t parameter_count = 0;
};

struct Derivative {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian;  // row-major d x d; empty for order 1
  bool breakpoint = false;
};

class Network {
 public:
  Network() = default;
  Network(std::size_t input_dim, std::vector<Layer> layers, std::string provenance = {},
          std::optional<Budget> budget = std::nullopt);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().rows; }
  std::size_t width() const;
  std::size_t depth() const { return layers_.size() - 1; }
  std::size_t parameter_count() const;
  const std::vector<Layer>& layers() const { return layers_; }
  const std::string& provenance() const { return provenance_; }
  bool has(Activation a) const;

  double evaluate(std::span<const double> x) const;
  std::vector<double> evaluate_all(std::span<const double> x) const;
  Derivative differentiate(std::span<const double> x, int order) const;

  Network with_provenance(std::string provenance) const;

 private:
  struct Sparse {
    std::vector<std::size_t> row_start;
    std::vector<std::size_t> col;
    std::vector<double> val;
  };

  void check_input(std::span<const double> x) const;

  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;
  std::string provenance_;
  std::vector<Sparse> sparse_;
};

BudgetReport budget_report(const Network& net);
bool within(const BudgetReport& r, const Budget& b);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace sobonet
