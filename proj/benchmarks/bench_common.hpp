#pragma once

#include <random>

#include "alcnet/image.hpp"
#include "alcnet/tensor.hpp"

namespace alcnet::bench {

inline nn::Tensor random_tensor(nn::Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Tensor t(s);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline GrayImage random_frame(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) img.at(i, j) = u(rng);
  return img;
}

}  // namespace alcnet::bench
