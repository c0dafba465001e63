#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dtstyle/layers.hpp"
#include "dtstyle/tensor.hpp"
#include "dtstyle/weights_file.hpp"

namespace dtstyle {

enum class StageKind { conv, relu, pool };

// One step of the network. For conv and relu stages `layer` is the conv layer
// name ("conv3_1"); the relu after convK_J produces that layer's feature map.
struct Stage {
  StageKind kind = StageKind::conv;
  std::string layer;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
};

// Ordered conv/relu/pool stages following the VGG naming convention: convK_J
// lives in block K, and a 2x2 pool separates consecutive blocks.
class NetworkSpec {
 public:
  // VGG-19 truncated after relu5_1: 13 conv layers, 3->64->64->128->128->
  // 256x4->512x4->512.
  static NetworkSpec vgg19(PoolMode pool_mode = PoolMode::max);
  // Builds the stage list implied by the layer names and channel counts in
  // `weights` (any prefix-shaped network, e.g. tiny test networks).
  static NetworkSpec from_weights(const NetworkWeights& weights, PoolMode pool_mode = PoolMode::max);

  const std::vector<Stage>& stages() const { return stages_; }
  PoolMode pool_mode() const { return pool_mode_; }
  std::vector<std::string> conv_layers() const;
  bool has_layer(std::string_view name) const;
  // Index of the relu stage emitting the feature map of `name`.
  std::size_t feature_stage(std::string_view name) const;
  // Throws std::invalid_argument if `weights` lacks a layer or disagrees on
  // channel counts.
  void check_weights(const NetworkWeights& weights) const;

 private:
  NetworkSpec(std::vector<Stage> stages, PoolMode pool_mode);
  void validate() const;

  std::vector<Stage> stages_;
  PoolMode pool_mode_ = PoolMode::max;
};

// Parses "convK_J"; returns false for anything else.
bool parse_conv_name(std::string_view name, unsigned& block, unsigned& index);

using FeatureBundle = std::map<std::string, Tensor3, std::less<>>;

// Stored activations of one forward pass; enough to run the exact backward
// pass. Single owner; not safe to share across threads while in use.
class ForwardTrace {
 public:
  const FeatureBundle& features() const { return features_; }
  const Tensor3& feature(std::string_view layer) const;
  const Shape3& input_shape() const { return input_shape_; }

 private:
  friend class FeatureExtractor;

  Shape3 input_shape_{};
  std::size_t last_stage_ = 0;
  // Per executed stage: relu inputs (empty for other stages) and pool records.
  std::vector<Tensor3> relu_inputs_;
  std::vector<PoolRecord> pool_records_;
  FeatureBundle features_;
};

// Deep copy of the requested feature maps.
FeatureBundle detach(const ForwardTrace& trace);

// Immutable pairing of weights and network spec; shareable across threads.
class FeatureExtractor {
 public:
  FeatureExtractor(NetworkWeights weights, NetworkSpec spec);
  explicit FeatureExtractor(NetworkWeights weights);

  const NetworkWeights& weights() const { return weights_; }
  const NetworkSpec& spec() const { return spec_; }

  // Runs stages up to the deepest requested layer and keeps post-ReLU maps
  // for each requested conv layer.
  ForwardTrace forward(const Tensor3& x, const std::set<std::string, std::less<>>& request) const;

  // dL/dx for gradients injected at requested layers; injections at several
  // layers add up through shared stages.
  Tensor3 backward_to_input(const ForwardTrace& trace, const FeatureBundle& layer_grads) const;

 private:
  NetworkWeights weights_;
  NetworkSpec spec_;
  // Index into weights_.layers for conv stages.
  std::vector<std::size_t> stage_layer_index_;
};

}  // namespace dtstyle
