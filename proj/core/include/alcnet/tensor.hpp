#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace alcnet::nn {

/// Dense NCHW shape. Feature maps are C×H×W planes stacked along a leading
/// batch axis N; convolution kernels reuse the same layout as Cout×Cin×k×k.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Row-major rank-4 array of doubles. All dimensions are at least one.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  /// Single-sample feature map (N = 1).
  static Tensor feature_map(int channels, int height, int width,
                            double fill = 0.0);

  const Shape& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int i, int j) { return data_[index(n, c, i, j)]; }
  double at(int n, int c, int i, int j) const {
    return data_[index(n, c, i, j)];
  }

  /// Pointer to the H×W plane of (sample n, channel c).
  double* plane(int n, int c) { return data_.data() + plane_offset(n, c); }
  const double* plane(int n, int c) const {
    return data_.data() + plane_offset(n, c);
  }

  void fill(double v);
  double sum() const;
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);

 private:
  std::size_t index(int n, int c, int i, int j) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + i) *
               shape_.w +
           j;
  }
  std::size_t plane_offset(int n, int c) const {
    return (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }

  Shape shape_{};
  std::vector<double> data_;
};

/// Throws std::invalid_argument naming `what` unless a and b match exactly.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace alcnet::nn
