#include "sobonet/arch.hpp"

#include <sstream>

#include "sobonet/errors.hpp"

namespace sobonet {

ArchSpec ArchSpec::parse(const std::string& csv, Activation act) {
  ArchSpec a;
  a.activation = act;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(item, &pos);
    } catch (const std::exception&) {
      throw InvalidInput("architecture entry '" + item + "' is not an integer");
    }
    if (pos != item.size() || v < 1) throw InvalidInput("architecture entries must be positive integers");
    a.widths.push_back(static_cast<std::size_t>(v));
  }
  if (a.widths.size() < 3) throw InvalidInput("architecture needs input, at least one hidden layer and output");
  if (a.widths.back() != 1) throw InvalidInput("architecture output width must be 1");
  return a;
}

std::vector<std::size_t> ArchSpec::layer_parameters() const {
  std::vector<std::size_t> w;
  for (std::size_t i = 1; i < widths.size(); ++i) w.push_back(widths[i] * widths[i - 1] + widths[i]);
  return w;
}

std::size_t ArchSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t w : layer_parameters()) n += w;
  return n;
}

std::string ArchSpec::str() const {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? "," : "") + std::to_string(widths[i]);
  return s;
}

Network arch_network(const ArchSpec& arch, std::span<const double> theta) {
  if (theta.size() != arch.parameter_count())
    throw InvalidInput("parameter vector has " + std::to_string(theta.size()) + " entries, architecture needs " +
                       std::to_string(arch.parameter_count()));
  std::vector<Layer> layers;
  std::size_t at = 0;
  for (std::size_t i = 1; i < arch.widths.size(); ++i) {
    const bool last = i + 1 == arch.widths.size();
    Layer l = Layer::zeros(arch.widths[i], arch.widths[i - 1], last ? Activation::linear : arch.activation);
    for (double& w : l.weights) w = theta[at++];
    for (double& b : l.bias) b = theta[at++];
    layers.push_back(std::move(l));
  }
  return Network(arch.input_dim(), std::move(layers), "arch(" + arch.str() + ")");
}

std::vector<double> arch_parameters(const Network& net) {
  std::vector<double> theta;
  for (const Layer& l : net.layers()) {
    theta.insert(theta.end(), l.weights.begin(), l.weights.end());
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  }
  return theta;
}

}  // namespace sobonet
