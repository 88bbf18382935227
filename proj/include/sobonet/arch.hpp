#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sobonet/network.hpp"

namespace sobonet {

// Fully connected architecture d -> N_1 -> ... -> N_L -> 1.
struct ArchSpec {
  std::vector<std::size_t> widths;  // N_0 = d, hidden widths, N_{L+1} = 1
  Activation activation = Activation::relu;

  static ArchSpec parse(const std::string& csv, Activation act = Activation::relu);
  std::size_t input_dim() const { return widths.front(); }
  std::size_t hidden_layers() const { return widths.size() - 2; }
  // W_i = N_i N_{i-1} + N_i for i = 1..L+1.
  std::vector<std::size_t> layer_parameters() const;
  std::size_t parameter_count() const;
  std::string str() const;
};

// Parameters are stored layer by layer: weights row-major, then biases.
Network arch_network(const ArchSpec& arch, std::span<const double> theta);
std::vector<double> arch_parameters(const Network& net);

}  // namespace sobonet
