#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "alcnet/graph.hpp"

namespace alcnet::nn {

struct GradCheckOptions {
  double eps = 1e-6;
  /// Coordinates sampled per parameter; parameters smaller than this are
  /// checked exhaustively.
  std::size_t max_coords = 24;
  std::uint64_t seed = 0x5eed;
};

/// Builds a scalar-valued graph.
using GraphBuilder = std::function<Var(Graph&)>;

/// Compares backward() gradients against central differences and returns
/// max |analytic - numeric| / max(1, |analytic|) over the sampled
/// coordinates. Piecewise-linear ops (relu, max, min) are only checked
/// reliably when no input sits within eps of a kink; callers choose inputs
/// accordingly.
double grad_check(const GraphBuilder& build, std::span<Parameter* const> params,
                  const GradCheckOptions& options = {});

}  // namespace alcnet::nn
