#include "alcnet/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace alcnet::nn {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" +
         std::to_string(h) + "x" + std::to_string(w);
}

namespace {
void validate(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
    throw std::invalid_argument("tensor dimensions must be >= 1, got " +
                                s.str());
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  validate(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  validate(shape_);
  if (data_.size() != shape_.numel())
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
}

Tensor Tensor::feature_map(int channels, int height, int width, double fill) {
  return Tensor(Shape{1, channels, height, width}, fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a == b) return;
  std::string dim;
  if (a.n != b.n)
    dim = "batch";
  else if (a.c != b.c)
    dim = "channels";
  else if (a.h != b.h)
    dim = "height";
  else
    dim = "width";
  throw std::invalid_argument(std::string(what) + ": shape mismatch in " +
                              dim + " (" + a.str() + " vs " + b.str() + ")");
}

}  // namespace alcnet::nn
