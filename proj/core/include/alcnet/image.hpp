#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alcnet/tensor.hpp"

namespace alcnet {

/// Single-channel image with real intensities, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, double fill = 0.0);
  GrayImage(int height, int width, std::vector<double> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  double& at(int i, int j) { return pixels_[static_cast<std::size_t>(i) * width_ + j]; }
  double at(int i, int j) const {
    return pixels_[static_cast<std::size_t>(i) * width_ + j];
  }
  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  /// 1×1×H×W view as a network input.
  nn::Tensor to_tensor() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

/// Binary mask, one byte per pixel holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, std::uint8_t fill = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  std::uint8_t& at(int i, int j) { return bits_[static_cast<std::size_t>(i) * width_ + j]; }
  std::uint8_t at(int i, int j) const {
    return bits_[static_cast<std::size_t>(i) * width_ + j];
  }
  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t count() const;
  bool is_binary() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Stacks equally sized images into an N×1×H×W batch.
nn::Tensor stack_images(std::span<const GrayImage* const> images);

}  // namespace alcnet
