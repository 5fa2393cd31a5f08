#include "alcnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace alcnet::nn {

namespace {
double evaluate(const GraphBuilder& build) {
  Graph g;
  const double v = g.value(build(g))[0];
  if (!std::isfinite(v))
    throw std::runtime_error("grad_check: non-finite function value");
  return v;
}
}  // namespace

double grad_check(const GraphBuilder& build, std::span<Parameter* const> params,
                  const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3))
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");

  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    Var out = build(g);
    g.backward(out);
  }

  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad();
    if (!analytic.all_finite())
      throw std::runtime_error("grad_check: non-finite gradient for " +
                               p->name());
    std::vector<std::size_t> coords(p->size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
    }
    for (std::size_t i : coords) {
      double& x = p->value()[i];
      const double saved = x;
      x = saved + options.eps;
      const double plus = evaluate(build);
      x = saved - options.eps;
      const double minus = evaluate(build);
      x = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max(1.0, std::abs(analytic[i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace alcnet::nn
