#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dtstyle/distance_field.hpp"
#include "dtstyle/extractor.hpp"
#include "dtstyle/tensor.hpp"

namespace dtstyle {

// Dense row-major n x n matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> v;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, double fill = 0.0) : n(size), v(size * size, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
  bool operator==(const SquareMatrix&) const = default;
};

// Gram matrix of one layer, with the layer dimensions the style term needs:
// N = channel count, M = spatial element count.
struct LayerGram {
  SquareMatrix gram;
  std::size_t channels = 0;
  std::size_t elements = 0;
};

using GramSet = std::map<std::string, LayerGram, std::less<>>;

struct LossWeights {
  double alpha = 0.001;
  double beta = 1.0;
  double gamma = 0.0;
  // Keys are the style layers.
  std::map<std::string, double, std::less<>> style_layer_weights;
  int emphasis_power = 1;

  // Uniform w_l = 1 / layers.size().
  static std::map<std::string, double, std::less<>> uniform(const std::vector<std::string>& layers);

  // Throws std::invalid_argument on negative weights, all-zero alpha/beta/
  // gamma, n < 1, or an empty style layer set.
  void validate() const;
};

struct LossReport {
  double content = 0.0;
  double style = 0.0;
  std::map<std::string, double, std::less<>> per_layer_style;
  double distance = 0.0;
  double total = 0.0;
};

struct ContentLoss {
  double value = 0.0;
  Tensor3 grad;
};

struct StyleLoss {
  double value = 0.0;
  std::map<std::string, double, std::less<>> per_layer;
  std::map<std::string, SquareMatrix, std::less<>> grad;
};

struct DistanceLoss {
  double value = 0.0;
  Tensor3 grad;
};

// G = F F^T with F viewed as channels x (height * width).
SquareMatrix gram(const Tensor3& features);
LayerGram layer_gram(const Tensor3& features);
GramSet gram_set(const FeatureBundle& features, const std::vector<std::string>& layers);

// value = 1/2 sum (F - P)^2, grad = F - P.
ContentLoss content_loss(const Tensor3& features, const Tensor3& target);

// E_l = sum (G - A)^2 / (4 N^2 M^2); value = sum_l w_l E_l;
// grad[l] = dE/dG scaled by w_l, i.e. w_l (G - A) / (2 N^2 M^2).
StyleLoss style_loss(const GramSet& grams_x, const GramSet& grams_a,
                     const std::map<std::string, double, std::less<>>& layer_weights);

// Chain rule through the Gram product: (grad_G + grad_G^T) F.
Tensor3 style_grad_to_features(const SquareMatrix& grad_gram, const Tensor3& features);

// value = 1/2 sum_{c,i,j} (D_ij (p - x)_cij)^2 with the field broadcast over
// channels; grad_x = -(D^2) (p - x).
DistanceLoss distance_loss(const Tensor3& content, const Tensor3& generated, const DistanceField& field);

double total_loss(double content, double style, double distance, const LossWeights& w);

}  // namespace dtstyle
