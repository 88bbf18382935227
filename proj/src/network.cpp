#include "sobonet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sobonet/errors.hpp"

namespace sobonet {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::requ:
      return "requ";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "requ") return Activation::requ;
  if (s == "linear") return Activation::linear;
  throw InvalidInput("unknown activation '" + std::string(s) + "'");
}

Layer Layer::zeros(std::size_t rows, std::size_t cols, Activation act) {
  Layer l;
  l.rows = rows;
  l.cols = cols;
  l.weights.assign(rows * cols, 0.0);
  l.bias.assign(rows, 0.0);
  l.activations.assign(rows, act);
  return l;
}

bool Layer::uniform() const {
  return std::all_of(activations.begin(), activations.end(),
                     [&](Activation a) { return a == activations.front(); });
}

Network::Network(std::size_t input_dim, std::vector<Layer> layers, std::string provenance,
                 std::optional<Budget> budget)
    : input_dim_(input_dim), layers_(std::move(layers)), provenance_(std::move(provenance)) {
  if (input_dim_ == 0) throw InvalidInput("network input dimension must be positive");
  if (layers_.empty()) throw InvalidInput("network needs at least an output layer");
  std::size_t prev = input_dim_;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    if (l.cols != prev)
      throw InvalidInput("layer " + std::to_string(li) + " expects " + std::to_string(l.cols) +
                         " inputs but receives " + std::to_string(prev));
    if (l.rows == 0) throw InvalidInput("layer " + std::to_string(li) + " has no neurons");
    if (l.weights.size() != l.rows * l.cols || l.bias.size() != l.rows ||
        l.activations.size() != l.rows)
      throw InvalidInput("layer " + std::to_string(li) + " has inconsistent storage sizes");
    for (double v : l.weights)
      if (!std::isfinite(v)) throw InvalidInput("non-finite weight");
    for (double v : l.bias)
      if (!std::isfinite(v)) throw InvalidInput("non-finite bias");
    prev = l.rows;
  }
  for (Activation a : layers_.back().activations)
    if (a != Activation::linear) throw InvalidInput("output layer must be linear");

  sparse_.resize(layers_.size());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    Sparse& s = sparse_[li];
    s.row_start.reserve(l.rows + 1);
    s.row_start.push_back(0);
    for (std::size_t r = 0; r < l.rows; ++r) {
      for (std::size_t c = 0; c < l.cols; ++c) {
        const double v = l.w(r, c);
        if (v != 0.0) {
          s.col.push_back(c);
          s.val.push_back(v);
        }
      }
      s.row_start.push_back(s.col.size());
    }
  }

  if (budget && budget->mode == Budget::Mode::enforce) {
    const BudgetReport r = budget_report(*this);
    if (!within(r, *budget)) {
      std::ostringstream os;
      os << "network '" << provenance_ << "' has width " << r.width << " and depth " << r.depth
         << ", exceeding the budget width <= " << budget->width_bound
         << ", depth <= " << budget->depth_bound;
      throw BudgetExceeded(os.str());
    }
  }
}

std::size_t Network::width() const {
  std::size_t w = 0;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) w = std::max(w, layers_[i].rows);
  return w;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.rows * l.cols + l.rows;
  return n;
}

bool Network::has(Activation a) const {
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
    for (Activation b : layers_[i].activations)
      if (a == b) return true;
  return false;
}

Network Network::with_provenance(std::string provenance) const {
  Network copy = *this;
  copy.provenance_ = std::move(provenance);
  return copy;
}

void Network::check_input(std::span<const double> x) const {
  if (x.size() != input_dim_)
    throw InvalidInput("input has dimension " + std::to_string(x.size()) + ", network expects " +
                       std::to_string(input_dim_));
}

std::vector<double> Network::evaluate_all(std::span<const double> x) const {
  check_input(x);
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    const Sparse& s = sparse_[li];
    next.assign(l.rows, 0.0);
    for (std::size_t r = 0; r < l.rows; ++r) {
      double acc = 0.0;
      for (std::size_t k = s.row_start[r]; k < s.row_start[r + 1]; ++k) acc += s.val[k] * cur[s.col[k]];
      acc += l.bias[r];
      switch (l.activations[r]) {
        case Activation::relu:
          acc = acc > 0.0 ? acc : 0.0;
          break;
        case Activation::requ:
          acc = acc > 0.0 ? acc * acc : 0.0;
          break;
        case Activation::linear:
          break;
      }
      next[r] = acc;
    }
    cur.swap(next);
  }
  return cur;
}

double Network::evaluate(std::span<const double> x) const {
  if (output_dim() != 1) throw InvalidInput("evaluate needs a scalar-output network");
  return evaluate_all(x)[0];
}

Derivative Network::differentiate(std::span<const double> x, int order) const {
  check_input(x);
  if (order != 1 && order != 2) throw UnsupportedOrder("derivative order must be 1 or 2");
  if (output_dim() != 1) throw InvalidInput("differentiate needs a scalar-output network");
  if (order == 2 && has(Activation::relu) && !has(Activation::requ))
    throw UnsupportedOrder("order-2 derivatives are undefined for piecewise-linear relu networks");

  const std::size_t d = input_dim_;
  const std::size_t dd = d * d;
  const bool second = order == 2;
  Derivative out;

  std::vector<double> val(x.begin(), x.end());
  std::vector<double> jac(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) jac[i * d + i] = 1.0;
  std::vector<double> hes(second ? d * dd : 0, 0.0);

  std::vector<double> nval, njac, nhes;
  std::vector<double> hj(d), hh(second ? dd : 0);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    const Sparse& s = sparse_[li];
    nval.assign(l.rows, 0.0);
    njac.assign(l.rows * d, 0.0);
    if (second) nhes.assign(l.rows * dd, 0.0);
    for (std::size_t r = 0; r < l.rows; ++r) {
      double h = 0.0;
      std::fill(hj.begin(), hj.end(), 0.0);
      if (second) std::fill(hh.begin(), hh.end(), 0.0);
      for (std::size_t k = s.row_start[r]; k < s.row_start[r + 1]; ++k) {
        const double w = s.val[k];
        const std::size_t c = s.col[k];
        h += w * val[c];
        for (std::size_t i = 0; i < d; ++i) hj[i] += w * jac[c * d + i];
        if (second)
          for (std::size_t i = 0; i < dd; ++i) hh[i] += w * hes[c * dd + i];
      }
      h += l.bias[r];

      // A kink only matters if the pre-activation actually moves through zero.
      const bool moving = std::any_of(hj.begin(), hj.end(), [](double v) { return v != 0.0; });
      double* oj = &njac[r * d];
      double* oh = second ? &nhes[r * dd] : nullptr;
      switch (l.activations[r]) {
        case Activation::linear:
          nval[r] = h;
          std::copy(hj.begin(), hj.end(), oj);
          if (second) std::copy(hh.begin(), hh.end(), oh);
          break;
        case Activation::relu:
          if (h == 0.0 && (moving || (second && std::any_of(hh.begin(), hh.end(),
                                                             [](double v) { return v != 0.0; }))))
            out.breakpoint = true;
          if (h > 0.0) {
            nval[r] = h;
            std::copy(hj.begin(), hj.end(), oj);
            if (second) std::copy(hh.begin(), hh.end(), oh);
          }
          break;
        case Activation::requ:
          if (h == 0.0 && second && moving) out.breakpoint = true;
          if (h > 0.0) {
            nval[r] = h * h;
            for (std::size_t i = 0; i < d; ++i) oj[i] = 2.0 * h * hj[i];
            if (second)
              for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                  oh[i * d + j] = 2.0 * hj[i] * hj[j] + 2.0 * h * hh[i * d + j];
          }
          break;
      }
    }
    val.swap(nval);
    jac.swap(njac);
    if (second) hes.swap(nhes);
  }
  out.value = val[0];
  out.gradient.assign(jac.begin(), jac.begin() + static_cast<std::ptrdiff_t>(d));
  if (second) out.hessian.assign(hes.begin(), hes.begin() + static_cast<std::ptrdiff_t>(dd));
  return out;
}

BudgetReport budget_report(const Network& net) {
  return {net.width(), net.depth(), net.parameter_count()};
}

bool within(const BudgetReport& r, const Budget& b) {
  return r.width <= b.width_bound && r.depth <= b.depth_bound;
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : net.layers()) {
    nlohmann::json jl;
    if (l.uniform()) {
      jl["activation"] = std::string(to_string(l.activations.front()));
    } else {
      nlohmann::json acts = nlohmann::json::array();
      for (Activation a : l.activations) acts.push_back(std::string(to_string(a)));
      jl["activation"] = acts;
    }
    jl["rows"] = l.rows;
    jl["cols"] = l.cols;
    jl["weights"] = l.weights;
    jl["bias"] = l.bias;
    layers.push_back(std::move(jl));
  }
  nlohmann::json j;
  j["input_dim"] = net.input_dim();
  j["layers"] = std::move(layers);
  j["provenance"] = net.provenance();
  return j;
}

Network network_from_json(const nlohmann::json& j) {
  try {
    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
      Layer l;
      l.rows = jl.at("rows").get<std::size_t>();
      l.cols = jl.at("cols").get<std::size_t>();
      l.weights = jl.at("weights").get<std::vector<double>>();
      l.bias = jl.at("bias").get<std::vector<double>>();
      const auto& ja = jl.at("activation");
      if (ja.is_string()) {
        l.activations.assign(l.rows, parse_activation(ja.get<std::string>()));
      } else {
        for (const auto& a : ja) l.activations.push_back(parse_activation(a.get<std::string>()));
      }
      layers.push_back(std::move(l));
    }
    return Network(j.at("input_dim").get<std::size_t>(), std::move(layers),
                   j.value("provenance", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed network document: ") + e.what());
  }
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << to_json(net).dump(1) << '\n';
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

Network load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
  return network_from_json(j);
}

}  // namespace sobonet
