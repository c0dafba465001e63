#include "dtstyle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtstyle {

std::string to_string(const Shape3& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" + std::to_string(shape.width);
}

Tensor3::Tensor3(Shape3 shape, double fill) : shape_(shape), data_(shape.volume(), fill) {}

Tensor3::Tensor3(Shape3 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.volume()) {
    throw std::invalid_argument("Tensor3: data length " + std::to_string(data_.size()) + " does not match shape " +
                                to_string(shape_));
  }
}

void Tensor3::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  require_same_shape(shape_, other.shape_, "Tensor3::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

void require_same_shape(const Shape3& a, const Shape3& b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

bool all_finite(const Tensor3& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

double dot(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double max_abs(const Tensor3& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace dtstyle
