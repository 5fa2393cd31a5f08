#include "alcnet/image.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace alcnet {

GrayImage::GrayImage(int height, int width, double fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

GrayImage::GrayImage(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("image pixel count does not match " +
                                std::to_string(height) + "x" +
                                std::to_string(width));
}

nn::Tensor GrayImage::to_tensor() const {
  return nn::Tensor(nn::Shape{1, 1, height_, width_}, pixels_);
}

BinaryMask::BinaryMask(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(height) * width, fill);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](auto b) { return b != 0; }));
}

bool BinaryMask::is_binary() const {
  return std::all_of(bits_.begin(), bits_.end(),
                     [](auto b) { return b == 0 || b == 1; });
}

nn::Tensor stack_images(std::span<const GrayImage* const> images) {
  if (images.empty()) throw std::invalid_argument("stack_images: no images");
  const int h = images[0]->height(), w = images[0]->width();
  nn::Tensor out(nn::Shape{static_cast<int>(images.size()), 1, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n]->height() != h || images[n]->width() != w)
      throw std::invalid_argument("stack_images: size mismatch in batch");
    std::copy(images[n]->pixels().begin(), images[n]->pixels().end(),
              out.plane(static_cast<int>(n), 0));
  }
  return out;
}

}  // namespace alcnet
