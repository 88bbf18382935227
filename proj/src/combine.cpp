#include "sobonet/combine.hpp"

#include <algorithm>

#include "sobonet/errors.hpp"

namespace sobonet {
namespace {

constexpr std::size_t kMaxProvenance = 1024;

std::string joined(std::string_view mode, std::span<const Network> parts) {
  std::string s(mode);
  s += '(';
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ", ";
    s += parts[i].provenance();
  }
  s += ')';
  if (s.size() > kMaxProvenance) s = std::string(mode) + "(" + std::to_string(parts.size()) + " parts)";
  return s;
}

std::string note_relu_channels(std::string prov, const std::vector<Layer>& layers) {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i)
    for (Activation a : layers[i].activations)
      if (a == Activation::requ) return prov + " +relu-identity";
  return prov;
}

// Layer computing pairs (sigma(o), sigma(-o)) for every output o of `out`.
Layer split_pairs(const Layer& out) {
  Layer l = Layer::zeros(2 * out.rows, out.cols, Activation::relu);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      l.w(2 * r, c) = out.w(r, c);
      l.w(2 * r + 1, c) = -out.w(r, c);
    }
    l.bias[2 * r] = out.bias[r];
    l.bias[2 * r + 1] = -out.bias[r];
  }
  return l;
}

// Maps k pairs to k pairs (or to k linear outputs when `act` is linear).
Layer carry_pairs(std::size_t k, Activation act) {
  const bool out = act == Activation::linear;
  Layer l = Layer::zeros(out ? k : 2 * k, 2 * k, act);
  for (std::size_t i = 0; i < k; ++i) {
    if (out) {
      l.w(i, 2 * i) = 1.0;
      l.w(i, 2 * i + 1) = -1.0;
    } else {
      l.w(2 * i, 2 * i) = 1.0;
      l.w(2 * i, 2 * i + 1) = -1.0;
      l.w(2 * i + 1, 2 * i) = -1.0;
      l.w(2 * i + 1, 2 * i + 1) = 1.0;
    }
  }
  return l;
}

Layer merge_affine(const Layer& outer, const Layer& inner) {
  Layer l = Layer::zeros(outer.rows, inner.cols, Activation::linear);
  l.activations = outer.activations;
  for (std::size_t r = 0; r < outer.rows; ++r) {
    double b = 0.0;
    for (std::size_t k = 0; k < outer.cols; ++k) {
      const double wo = outer.w(r, k);
      if (wo == 0.0) continue;
      for (std::size_t c = 0; c < inner.cols; ++c) {
        const double wi = inner.w(k, c);
        if (wi != 0.0) l.w(r, c) += wo * wi;
      }
      if (inner.bias[k] != 0.0) b += wo * inner.bias[k];
    }
    l.bias[r] = b + outer.bias[r];
  }
  return l;
}

}  // namespace

Network compose(const Network& outer, const Network& inner) {
  if (outer.input_dim() != inner.output_dim())
    throw InvalidInput("compose: outer net expects " + std::to_string(outer.input_dim()) +
                       " inputs, inner net produces " + std::to_string(inner.output_dim()));
  std::vector<Layer> layers(inner.layers().begin(), inner.layers().end() - 1);
  layers.push_back(merge_affine(outer.layers().front(), inner.layers().back()));
  layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
  std::string prov = "compose(" + inner.provenance() + " -> " + outer.provenance() + ")";
  if (prov.size() > kMaxProvenance) prov = "compose";
  return Network(inner.input_dim(), std::move(layers), std::move(prov));
}

Network pad_depth(const Network& net, std::size_t depth) {
  if (depth < net.depth()) throw InvalidInput("pad_depth cannot reduce depth");
  if (depth == net.depth()) return net;
  const std::size_t k = net.output_dim();
  std::vector<Layer> layers(net.layers().begin(), net.layers().end() - 1);
  layers.push_back(split_pairs(net.layers().back()));
  while (layers.size() < depth) layers.push_back(carry_pairs(k, Activation::relu));
  layers.push_back(carry_pairs(k, Activation::linear));
  return Network(net.input_dim(), layers, note_relu_channels(net.provenance(), layers));
}

Network parallel(std::span<const Network> parts) {
  if (parts.empty()) throw InvalidInput("parallel needs at least one part");
  const std::size_t d = parts.front().input_dim();
  std::size_t depth = 0;
  for (const Network& p : parts) {
    if (p.input_dim() != d) throw InvalidInput("parallel parts must share the input dimension");
    depth = std::max(depth, p.depth());
  }
  std::vector<Network> padded;
  padded.reserve(parts.size());
  for (const Network& p : parts) padded.push_back(pad_depth(p, depth));

  std::vector<Layer> layers;
  for (std::size_t li = 0; li <= depth; ++li) {
    std::size_t rows = 0, cols = 0;
    for (const Network& p : padded) {
      rows += p.layers()[li].rows;
      cols += p.layers()[li].cols;
    }
    if (li == 0) cols = d;
    Layer l = Layer::zeros(rows, cols, Activation::linear);
    std::size_t r0 = 0, c0 = 0;
    for (const Network& p : padded) {
      const Layer& src = p.layers()[li];
      const std::size_t cbase = li == 0 ? 0 : c0;
      for (std::size_t r = 0; r < src.rows; ++r) {
        for (std::size_t c = 0; c < src.cols; ++c) l.w(r0 + r, cbase + c) = src.w(r, c);
        l.bias[r0 + r] = src.bias[r];
        l.activations[r0 + r] = src.activations[r];
      }
      r0 += src.rows;
      c0 += src.cols;
    }
    layers.push_back(std::move(l));
  }
  return Network(d, std::move(layers), joined("parallel", parts));
}

Network sum_chain(std::span<const Network> parts) {
  if (parts.empty()) throw InvalidInput("sum needs at least one part");
  const std::size_t d = parts.front().input_dim();
  std::vector<const Network*> deep;
  std::vector<const Network*> flat;
  for (const Network& p : parts) {
    if (p.input_dim() != d) throw InvalidInput("sum parts must share the input dimension");
    if (p.output_dim() != 1) throw InvalidInput("sum parts must be scalar-valued");
    (p.depth() == 0 ? flat : deep).push_back(&p);
  }

  if (deep.empty()) {
    Layer out = Layer::zeros(1, d, Activation::linear);
    for (const Network* p : flat) {
      const Layer& l = p->layers().front();
      for (std::size_t c = 0; c < d; ++c) out.w(0, c) += l.w(0, c);
      out.bias[0] += l.bias[0];
    }
    return Network(d, {out}, joined("sum", parts));
  }

  std::size_t part_width = 0;
  for (const Network* p : deep) part_width = std::max(part_width, p->width());
  // Row layout of every hidden layer: [part neurons | x pairs (2d) | running-sum pair (2)].
  const std::size_t xo = part_width;
  const std::size_t so = part_width + 2 * d;
  const std::size_t rows = part_width + 2 * d + 2;

  std::vector<Layer> layers;
  const Layer* prev_part_out = nullptr;  // output layer of the part finished in the previous layer
  std::size_t prev_rows = 0;
  for (const Network* p : deep) {
    for (std::size_t j = 0; j < p->depth(); ++j) {
      const bool first = layers.empty();
      Layer l = Layer::zeros(rows, first ? d : rows, Activation::relu);
      const Layer& src = p->layers()[j];
      for (std::size_t r = 0; r < src.rows; ++r) {
        l.activations[r] = src.activations[r];
        l.bias[r] = src.bias[r];
        for (std::size_t c = 0; c < src.cols; ++c) {
          const double w = src.w(r, c);
          if (j > 0) {
            l.w(r, c) = w;
          } else if (first) {
            l.w(r, c) = w;
          } else {
            l.w(r, xo + 2 * c) = w;
            l.w(r, xo + 2 * c + 1) = -w;
          }
        }
      }
      for (std::size_t c = 0; c < d; ++c) {
        if (first) {
          l.w(xo + 2 * c, c) = 1.0;
          l.w(xo + 2 * c + 1, c) = -1.0;
        } else {
          l.w(xo + 2 * c, xo + 2 * c) = 1.0;
          l.w(xo + 2 * c, xo + 2 * c + 1) = -1.0;
          l.w(xo + 2 * c + 1, xo + 2 * c) = -1.0;
          l.w(xo + 2 * c + 1, xo + 2 * c + 1) = 1.0;
        }
      }
      if (!first) {
        for (int sign : {1, -1}) {
          const std::size_t r = so + (sign > 0 ? 0 : 1);
          const double sg = sign;
          l.w(r, so) = sg;
          l.w(r, so + 1) = -sg;
          if (j == 0 && prev_part_out) {
            for (std::size_t c = 0; c < prev_rows; ++c) l.w(r, c) += sg * prev_part_out->w(0, c);
            l.bias[r] = sg * prev_part_out->bias[0];
          }
        }
      }
      layers.push_back(std::move(l));
    }
    prev_part_out = &p->layers().back();
    prev_rows = p->layers().back().cols;
  }

  Layer out = Layer::zeros(1, rows, Activation::linear);
  out.w(0, so) = 1.0;
  out.w(0, so + 1) = -1.0;
  for (std::size_t c = 0; c < prev_rows; ++c) out.w(0, c) += prev_part_out->w(0, c);
  out.bias[0] = prev_part_out->bias[0];
  for (const Network* p : flat) {
    const Layer& l = p->layers().front();
    for (std::size_t c = 0; c < d; ++c) {
      out.w(0, xo + 2 * c) += l.w(0, c);
      out.w(0, xo + 2 * c + 1) -= l.w(0, c);
    }
    out.bias[0] += l.bias[0];
  }
  layers.push_back(std::move(out));
  return Network(d, layers, note_relu_channels(joined("sum", parts), layers));
}

Network identity_extend(const Network& net, std::size_t extra) {
  const std::size_t d = net.input_dim();
  const std::size_t e = extra;
  std::vector<Layer> layers;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const Layer& src = net.layers()[li];
    const bool first = li == 0;
    const bool last = li + 1 == net.layers().size();
    const std::size_t cols = first ? d + e : src.cols + 2 * e;
    const std::size_t rows = src.rows + (last ? e : 2 * e);
    Layer l = Layer::zeros(rows, cols, Activation::relu);
    for (std::size_t r = 0; r < src.rows; ++r) {
      for (std::size_t c = 0; c < src.cols; ++c) l.w(r, c) = src.w(r, c);
      l.bias[r] = src.bias[r];
      l.activations[r] = src.activations[r];
    }
    for (std::size_t k = 0; k < e; ++k) {
      if (last) {
        const std::size_t r = src.rows + k;
        l.activations[r] = Activation::linear;
        if (first) {
          l.w(r, d + k) = 1.0;
        } else {
          l.w(r, src.cols + 2 * k) = 1.0;
          l.w(r, src.cols + 2 * k + 1) = -1.0;
        }
        continue;
      }
      const std::size_t rp = src.rows + 2 * k;
      if (first) {
        l.w(rp, d + k) = 1.0;
        l.w(rp + 1, d + k) = -1.0;
      } else {
        const std::size_t cp = src.cols + 2 * k;
        l.w(rp, cp) = 1.0;
        l.w(rp, cp + 1) = -1.0;
        l.w(rp + 1, cp) = -1.0;
        l.w(rp + 1, cp + 1) = 1.0;
      }
    }
    layers.push_back(std::move(l));
  }
  return Network(d + e, layers,
                 note_relu_channels("identity_extend(" + net.provenance() + ", " +
                                        std::to_string(e) + ")",
                                    layers));
}

Network combine(CombineMode mode, std::span<const Network> parts, const CombineOptions& opts) {
  if (parts.empty()) throw InvalidInput("combine needs at least one part");
  Network result;
  switch (mode) {
    case CombineMode::compose: {
      result = parts.front();
      for (std::size_t i = 1; i < parts.size(); ++i) result = compose(parts[i], result);
      break;
    }
    case CombineMode::sum:
      result = sum_chain(parts);
      break;
    case CombineMode::parallel:
      result = parallel(parts);
      break;
    case CombineMode::identity_extend:
      if (parts.size() != 1) throw InvalidInput("identity_extend takes exactly one part");
      result = identity_extend(parts.front(), opts.extra_inputs);
      break;
  }
  std::string prov = opts.provenance.empty() ? result.provenance() : opts.provenance;
  return Network(result.input_dim(), result.layers(), std::move(prov), opts.budget);
}

Network linear_map(std::size_t input_dim, std::size_t output_dim, std::span<const double> a,
                   std::span<const double> c) {
  if (a.size() != input_dim * output_dim || c.size() != output_dim)
    throw InvalidInput("linear_map: matrix or offset has the wrong size");
  Layer l = Layer::zeros(output_dim, input_dim, Activation::linear);
  std::copy(a.begin(), a.end(), l.weights.begin());
  std::copy(c.begin(), c.end(), l.bias.begin());
  return Network(input_dim, {l}, "linear");
}

Network pre_affine(const Network& net, std::size_t new_input_dim, std::span<const double> a,
                   std::span<const double> c) {
  Network inner = linear_map(new_input_dim, net.input_dim(), a, c);
  return compose(net, inner).with_provenance(net.provenance());
}

Network post_affine(const Network& net, std::size_t new_output_dim, std::span<const double> b,
                    std::span<const double> e) {
  Network outer = linear_map(net.output_dim(), new_output_dim, b, e);
  return compose(outer, net).with_provenance(net.provenance());
}

Network select_inputs(const Network& net, std::size_t input_dim, std::span<const std::size_t> idx) {
  if (idx.size() != net.input_dim()) throw InvalidInput("select_inputs: index count mismatch");
  std::vector<double> a(net.input_dim() * input_dim, 0.0);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= input_dim) throw InvalidInput("select_inputs: index out of range");
    a[r * input_dim + idx[r]] = 1.0;
  }
  std::vector<double> c(net.input_dim(), 0.0);
  return pre_affine(net, input_dim, a, c);
}

Network shift_inputs(const Network& net, std::span<const double> shift) {
  const std::size_t d = net.input_dim();
  if (shift.size() != d) throw InvalidInput("shift_inputs: shift has the wrong size");
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = 1.0;
  return pre_affine(net, d, a, shift);
}

}  // namespace sobonet
