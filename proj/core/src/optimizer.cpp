#include "dtstyle/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace dtstyle {

void OptimConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw std::invalid_argument("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw std::invalid_argument("adam_beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be positive");
}

Tensor3 adam_step(const Tensor3& x, const Tensor3& grad, OptimState& state, const OptimConfig& cfg) {
  require_same_shape(x.shape(), grad.shape(), "adam_step");
  if (state.step == 0 && state.first_moment.empty()) state = OptimState::zeros(x.shape());
  require_same_shape(x.shape(), state.first_moment.shape(), "adam_step state");
  require_same_shape(x.shape(), state.second_moment.shape(), "adam_step state");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);

  Tensor3 next(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    next[i] = x[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
  return next;
}

Tensor3 init_generated(const Tensor3& content) { return content; }

TransferObjective::TransferObjective(const FeatureExtractor& extractor, const TransferProblem& problem)
    : extractor_(extractor), problem_(problem) {
  problem.weights.validate();
  if (problem.content.shape() != problem.style.shape()) {
    throw std::invalid_argument("content and style tensors must share the run resolution (" +
                                to_string(problem.content.shape()) + " vs " + to_string(problem.style.shape()) + ")");
  }
  if (problem.field.width != problem.content.width() || problem.field.height != problem.content.height()) {
    throw std::invalid_argument("distance field does not match the content resolution");
  }
  if (problem.field.emphasis_power != problem.weights.emphasis_power) {
    throw std::invalid_argument("distance field emphasis power " + std::to_string(problem.field.emphasis_power) +
                                " differs from configured n = " + std::to_string(problem.weights.emphasis_power));
  }

  request_.insert(problem.content_layer);
  for (const auto& [name, w] : problem.weights.style_layer_weights) {
    request_.insert(name);
    style_layers_.push_back(name);
  }

  const ForwardTrace content_trace = extractor_.forward(problem.content, {problem.content_layer});
  content_target_ = content_trace.feature(problem.content_layer);

  std::set<std::string, std::less<>> style_request(style_layers_.begin(), style_layers_.end());
  const FeatureBundle style_features = detach(extractor_.forward(problem.style, style_request));
  style_targets_ = gram_set(style_features, style_layers_);
}

Evaluation TransferObjective::evaluate(const Tensor3& x) const {
  const LossWeights& w = problem_.weights;
  const ForwardTrace trace = extractor_.forward(x, request_);

  Evaluation out;
  FeatureBundle layer_grads;

  const ContentLoss content = content_loss(trace.feature(problem_.content_layer), content_target_);
  out.report.content = content.value;
  Tensor3 content_grad = content.grad;
  content_grad *= w.alpha;
  layer_grads.emplace(problem_.content_layer, std::move(content_grad));

  const GramSet grams_x = gram_set(trace.features(), style_layers_);
  const StyleLoss style = style_loss(grams_x, style_targets_, w.style_layer_weights);
  out.report.style = style.value;
  out.report.per_layer_style = style.per_layer;
  for (const std::string& name : style_layers_) {
    Tensor3 g = style_grad_to_features(style.grad.at(name), trace.feature(name));
    g *= w.beta;
    if (auto it = layer_grads.find(name); it != layer_grads.end()) {
      it->second += g;
    } else {
      layer_grads.emplace(name, std::move(g));
    }
  }

  out.grad = extractor_.backward_to_input(trace, layer_grads);

  DistanceLoss distance = distance_loss(problem_.content, x, problem_.field);
  out.report.distance = distance.value;
  if (w.gamma != 0.0) {
    distance.grad *= w.gamma;
    out.grad += distance.grad;
  }

  out.report.total = total_loss(out.report.content, out.report.style, out.report.distance, w);
  return out;
}

RunResult run(const FeatureExtractor& extractor, const TransferProblem& problem, const OptimConfig& cfg,
              const RunHooks& hooks) {
  cfg.validate();
  const TransferObjective objective(extractor, problem);

  RunResult result;
  result.trace.reserve(cfg.iterations);
  Tensor3 x = init_generated(problem.content);
  OptimState state = OptimState::zeros(x.shape());

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    try {
      Evaluation eval = objective.evaluate(x);
      if (!all_finite(eval.grad) || !std::isfinite(eval.report.total)) {
        throw std::runtime_error("non-finite loss or gradient");
      }
      if (hooks.on_progress) hooks.on_progress(it, eval.report);
      result.trace.push_back(std::move(eval.report));
      x = adam_step(x, eval.grad, state, cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(it) + ": " + e.what());
    }

    const std::size_t done = it + 1;
    if (cfg.snapshot_every != 0 && done % cfg.snapshot_every == 0) {
      if (hooks.on_snapshot) hooks.on_snapshot(done, x);
      if (hooks.keep_snapshots) result.snapshots.push_back({done, x});
    }
  }

  result.final_loss = objective.evaluate(x).report;
  result.image = std::move(x);
  return result;
}

}  // namespace dtstyle
