#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "alcnet/graph.hpp"
#include "alcnet/image.hpp"
#include "alcnet/ops.hpp"

namespace alcnet::testing {

inline nn::Tensor random_tensor(nn::Shape s, std::uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Tensor t(s);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline std::unique_ptr<nn::Parameter> random_param(const std::string& name, nn::Shape s,
                                                   std::uint64_t seed, double lo = -1.0,
                                                   double hi = 1.0) {
  return std::make_unique<nn::Parameter>(name, random_tensor(s, seed, lo, hi));
}

// Scalar read-out Σ w ⊗ x with fixed random weights, so every output
// coordinate receives a distinct upstream gradient.
inline nn::Var weighted_sum(nn::Graph& g, nn::Var x, std::uint64_t seed = 99) {
  const nn::Var w = g.input(random_tensor(g.value(x).shape(), seed));
  return nn::sum(g, nn::mul(g, x, w));
}

inline GrayImage random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(h, w);
  for (auto& v : img.pixels()) v = u(rng);
  return img;
}

inline BinaryMask random_mask(int h, int w, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution b(density);
  BinaryMask m(h, w);
  for (auto& v : m.bits()) v = b(rng) ? 1 : 0;
  return m;
}

}  // namespace alcnet::testing
