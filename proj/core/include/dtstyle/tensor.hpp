#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dtstyle {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const { return height * width; }
  std::size_t volume() const { return channels * height * width; }

  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& shape);

// Dense channel-major (C, H, W) array of doubles. Images, feature maps and
// gradients all travel as Tensor3.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Shape3 shape, double fill = 0.0);
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : Tensor3(Shape3{channels, height, width}, fill) {}
  // Throws std::invalid_argument when data.size() != shape.volume().
  Tensor3(Shape3 shape, std::vector<double> data);

  const Shape3& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> channel(std::size_t c) { return std::span(data_).subspan(c * shape_.plane(), shape_.plane()); }
  std::span<const double> channel(std::size_t c) const {
    return std::span(data_).subspan(c * shape_.plane(), shape_.plane());
  }

  void fill(double value);

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator*=(double scale);

  bool operator==(const Tensor3&) const = default;

 private:
  Shape3 shape_{};
  std::vector<double> data_;
};

// Throws std::invalid_argument naming `what` when the shapes differ.
void require_same_shape(const Shape3& a, const Shape3& b, const char* what);

bool all_finite(const Tensor3& t);
double dot(const Tensor3& a, const Tensor3& b);
double max_abs(const Tensor3& t);

}  // namespace dtstyle
