#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sobonet/network.hpp"

namespace sobonet {

enum class CombineMode { compose, sum, parallel, identity_extend };

struct CombineOptions {
  std::size_t extra_inputs = 0;  // identity_extend only
  std::string provenance;
  std::optional<Budget> budget;
};

// compose: parts are applied in order, parts[0] first.
// sum: scalar parts over the same input, chained with identity channels (width max + 2d + 2).
// parallel: same input, outputs concatenated in part order.
// identity_extend: a single part; extra trailing inputs are threaded to extra outputs.
Network combine(CombineMode mode, std::span<const Network> parts, const CombineOptions& opts = {});

Network compose(const Network& outer, const Network& inner);
Network sum_chain(std::span<const Network> parts);
Network parallel(std::span<const Network> parts);
Network identity_extend(const Network& net, std::size_t extra_inputs);

// Carries the outputs through relu identity pairs until the network has the requested depth.
Network pad_depth(const Network& net, std::size_t depth);

// Affine maps on either side: x -> net(A x + c), y -> B y + e. Row-major matrices.
Network pre_affine(const Network& net, std::size_t new_input_dim, std::span<const double> a,
                   std::span<const double> c);
Network post_affine(const Network& net, std::size_t new_output_dim, std::span<const double> b,
                    std::span<const double> e);
Network linear_map(std::size_t input_dim, std::size_t output_dim, std::span<const double> a,
                   std::span<const double> c);

// Picks input coordinates: x -> net(x[idx[0]], x[idx[1]], ...).
Network select_inputs(const Network& net, std::size_t input_dim, std::span<const std::size_t> idx);
// x -> net(x + shift).
Network shift_inputs(const Network& net, std::span<const double> shift);

}  // namespace sobonet
