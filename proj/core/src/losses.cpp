#include "dtstyle/losses.hpp"

#include <stdexcept>

namespace dtstyle {

std::map<std::string, double, std::less<>> LossWeights::uniform(const std::vector<std::string>& layers) {
  std::map<std::string, double, std::less<>> w;
  for (const std::string& name : layers) w[name] = 1.0 / static_cast<double>(layers.size());
  return w;
}

void LossWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw std::invalid_argument("loss weights must be non-negative");
  if (!(alpha > 0.0 || beta > 0.0 || gamma > 0.0)) {
    throw std::invalid_argument("at least one of alpha, beta, gamma must be positive");
  }
  if (emphasis_power < 1) throw std::invalid_argument("emphasis power must be >= 1");
  if (style_layer_weights.empty()) throw std::invalid_argument("no style layers configured");
  for (const auto& [name, w] : style_layer_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("style layer weight for " + name + " must be non-negative");
  }
}

SquareMatrix gram(const Tensor3& features) {
  const std::size_t n = features.channels();
  const std::size_t m = features.shape().plane();
  SquareMatrix g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> fi = features.channel(i);
    for (std::size_t j = i; j < n; ++j) {
      const std::span<const double> fj = features.channel(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += fi[k] * fj[k];
      g(i, j) = sum;
      g(j, i) = sum;
    }
  }
  return g;
}

LayerGram layer_gram(const Tensor3& features) {
  return {gram(features), features.channels(), features.shape().plane()};
}

GramSet gram_set(const FeatureBundle& features, const std::vector<std::string>& layers) {
  GramSet set;
  for (const std::string& name : layers) {
    auto it = features.find(name);
    if (it == features.end()) throw std::invalid_argument("gram_set: missing feature map for " + name);
    set.emplace(name, layer_gram(it->second));
  }
  return set;
}

ContentLoss content_loss(const Tensor3& features, const Tensor3& target) {
  require_same_shape(features.shape(), target.shape(), "content_loss");
  ContentLoss out{0.0, Tensor3(features.shape())};
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double d = features[i] - target[i];
    out.grad[i] = d;
    out.value += d * d;
  }
  out.value *= 0.5;
  return out;
}

StyleLoss style_loss(const GramSet& grams_x, const GramSet& grams_a,
                     const std::map<std::string, double, std::less<>>& layer_weights) {
  StyleLoss out;
  for (const auto& [name, weight] : layer_weights) {
    auto gx = grams_x.find(name);
    auto ga = grams_a.find(name);
    if (gx == grams_x.end() || ga == grams_a.end()) {
      throw std::invalid_argument("style_loss: layer " + name + " missing from a Gram set");
    }
    const LayerGram& x = gx->second;
    const LayerGram& a = ga->second;
    if (x.channels != a.channels || x.elements != a.elements || x.gram.n != a.gram.n || x.gram.n != x.channels) {
      throw std::invalid_argument("style_loss: dimension mismatch at layer " + name);
    }
    const double n = static_cast<double>(x.channels);
    const double m = static_cast<double>(x.elements);
    const double norm = n * n * m * m;

    SquareMatrix grad(x.gram.n);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.gram.v.size(); ++i) {
      const double d = x.gram.v[i] - a.gram.v[i];
      sum += d * d;
      grad.v[i] = weight * d / (2.0 * norm);
    }
    const double e = sum / (4.0 * norm);
    out.per_layer[name] = e;
    out.value += weight * e;
    out.grad.emplace(name, std::move(grad));
  }
  return out;
}

Tensor3 style_grad_to_features(const SquareMatrix& grad_gram, const Tensor3& features) {
  const std::size_t n = features.channels();
  if (grad_gram.n != n || grad_gram.v.size() != n * n) {
    throw std::invalid_argument("style_grad_to_features: gradient is " + std::to_string(grad_gram.n) + "x" +
                                std::to_string(grad_gram.n) + ", features have " + std::to_string(n) + " channels");
  }
  const std::size_t m = features.shape().plane();
  Tensor3 out(features.shape());
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> dst = out.channel(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double s = grad_gram(i, j) + grad_gram(j, i);
      if (s == 0.0) continue;
      const std::span<const double> fj = features.channel(j);
      for (std::size_t k = 0; k < m; ++k) dst[k] += s * fj[k];
    }
  }
  return out;
}

DistanceLoss distance_loss(const Tensor3& content, const Tensor3& generated, const DistanceField& field) {
  require_same_shape(content.shape(), generated.shape(), "distance_loss");
  if (field.width != content.width() || field.height != content.height() ||
      field.values.size() != field.width * field.height) {
    throw std::invalid_argument("distance_loss: field is " + std::to_string(field.width) + "x" +
                                std::to_string(field.height) + ", images are " + std::to_string(content.width()) +
                                "x" + std::to_string(content.height()));
  }
  DistanceLoss out{0.0, Tensor3(content.shape())};
  const std::size_t plane = content.shape().plane();
  double sum = 0.0;
  for (std::size_t c = 0; c < content.channels(); ++c) {
    for (std::size_t k = 0; k < plane; ++k) {
      const std::size_t i = c * plane + k;
      const double d = field.values[k];
      const double diff = content[i] - generated[i];
      const double weighted = d * diff;
      sum += weighted * weighted;
      out.grad[i] = -(d * d) * diff;
    }
  }
  out.value = 0.5 * sum;
  return out;
}

double total_loss(double content, double style, double distance, const LossWeights& w) {
  return w.alpha * content + w.beta * style + w.gamma * distance;
}

}  // namespace dtstyle
