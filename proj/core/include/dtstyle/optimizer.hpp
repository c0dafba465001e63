#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "dtstyle/distance_field.hpp"
#include "dtstyle/extractor.hpp"
#include "dtstyle/losses.hpp"
#include "dtstyle/tensor.hpp"

namespace dtstyle {

struct OptimConfig {
  std::size_t iterations = 500;
  // In preprocessed-pixel units.
  double learning_rate = 2.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // 0 disables snapshots.
  std::size_t snapshot_every = 50;
  std::uint64_t seed = 0;

  void validate() const;

  bool operator==(const OptimConfig&) const = default;
};

struct OptimState {
  Tensor3 first_moment;
  Tensor3 second_moment;
  std::uint64_t step = 0;

  static OptimState zeros(const Shape3& shape) { return {Tensor3(shape), Tensor3(shape), 0}; }
};

// Bias-corrected Adam update; returns x - lr * m_hat / (sqrt(v_hat) + eps)
// and advances `state`.
Tensor3 adam_step(const Tensor3& x, const Tensor3& grad, OptimState& state, const OptimConfig& cfg);

// The generated image starts as a copy of the content tensor.
Tensor3 init_generated(const Tensor3& content);

struct TransferProblem {
  Tensor3 content;
  Tensor3 style;
  // Already emphasized with `weights.emphasis_power`.
  DistanceField field;
  std::string content_layer = "conv4_2";
  LossWeights weights;
};

struct Snapshot {
  std::size_t iteration = 0;
  Tensor3 image;
};

struct RunResult {
  Tensor3 image;
  // trace[i] is evaluated at the image before step i.
  std::vector<LossReport> trace;
  // Evaluated at the returned image.
  LossReport final_loss;
  std::vector<Snapshot> snapshots;
};

// Called after step `iteration` (1-based) when a snapshot is due.
using SnapshotSink = std::function<void(std::size_t iteration, const Tensor3& image)>;
// Called with each iteration's report before its step.
using ProgressSink = std::function<void(std::size_t iteration, const LossReport& report)>;

struct RunHooks {
  SnapshotSink on_snapshot;
  ProgressSink on_progress;
  // Snapshots are retained in RunResult only when true.
  bool keep_snapshots = true;
};

// Evaluates every loss term and the combined pixel gradient at `x`.
struct Evaluation {
  LossReport report;
  Tensor3 grad;
};

// Precomputed targets for one problem: P at the content layer, A at the
// style layers. Holds references; extractor and problem must outlive it.
class TransferObjective {
 public:
  TransferObjective(const FeatureExtractor& extractor, const TransferProblem& problem);

  Evaluation evaluate(const Tensor3& x) const;

 private:
  const FeatureExtractor& extractor_;
  const TransferProblem& problem_;
  std::set<std::string, std::less<>> request_;
  std::vector<std::string> style_layers_;
  Tensor3 content_target_;
  GramSet style_targets_;
};

// Throws std::runtime_error naming the failing iteration if a module error
// occurs mid-run.
RunResult run(const FeatureExtractor& extractor, const TransferProblem& problem, const OptimConfig& cfg,
              const RunHooks& hooks = {});

}  // namespace dtstyle
