#include "dtstyle/extractor.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <stdexcept>

namespace dtstyle {

namespace {

constexpr std::size_t kNoLayer = std::numeric_limits<std::size_t>::max();

std::string conv_name(unsigned block, unsigned index) {
  return "conv" + std::to_string(block) + "_" + std::to_string(index);
}

void append_conv(std::vector<Stage>& stages, const std::string& name, std::size_t in, std::size_t out) {
  if (!stages.empty() && stages.back().kind == StageKind::relu) {
    unsigned prev_block = 0, prev_index = 0, block = 0, index = 0;
    parse_conv_name(stages.back().layer, prev_block, prev_index);
    parse_conv_name(name, block, index);
    if (block != prev_block) stages.push_back({StageKind::pool, "", in, in});
  }
  stages.push_back({StageKind::conv, name, in, out});
  stages.push_back({StageKind::relu, name, out, out});
}

}  // namespace

bool parse_conv_name(std::string_view name, unsigned& block, unsigned& index) {
  if (!name.starts_with("conv")) return false;
  name.remove_prefix(4);
  const auto underscore = name.find('_');
  if (underscore == std::string_view::npos || underscore == 0 || underscore + 1 == name.size()) return false;
  const char* first = name.data();
  auto [p1, e1] = std::from_chars(first, first + underscore, block);
  if (e1 != std::errc{} || p1 != first + underscore) return false;
  const char* second = first + underscore + 1;
  auto [p2, e2] = std::from_chars(second, name.data() + name.size(), index);
  if (e2 != std::errc{} || p2 != name.data() + name.size()) return false;
  return block >= 1 && index >= 1;
}

NetworkSpec::NetworkSpec(std::vector<Stage> stages, PoolMode pool_mode)
    : stages_(std::move(stages)), pool_mode_(pool_mode) {
  validate();
}

NetworkSpec NetworkSpec::vgg19(PoolMode pool_mode) {
  struct Block {
    unsigned convs;
    std::size_t channels;
  };
  static constexpr Block kBlocks[] = {{2, 64}, {2, 128}, {4, 256}, {4, 512}, {1, 512}};
  std::vector<Stage> stages;
  std::size_t in = 3;
  unsigned block = 1;
  for (const Block& b : kBlocks) {
    for (unsigned j = 1; j <= b.convs; ++j) {
      append_conv(stages, conv_name(block, j), in, b.channels);
      in = b.channels;
    }
    ++block;
  }
  return NetworkSpec(std::move(stages), pool_mode);
}

NetworkSpec NetworkSpec::from_weights(const NetworkWeights& weights, PoolMode pool_mode) {
  std::vector<Stage> stages;
  for (const ConvLayer& layer : weights.layers) {
    unsigned block = 0, index = 0;
    if (!parse_conv_name(layer.name, block, index)) {
      throw std::invalid_argument("layer name '" + layer.name + "' is not of the form convK_J");
    }
    append_conv(stages, layer.name, layer.in_channels, layer.out_channels);
  }
  return NetworkSpec(std::move(stages), pool_mode);
}

void NetworkSpec::validate() const {
  if (stages_.empty()) throw std::invalid_argument("NetworkSpec: no stages");
  unsigned prev_block = 0, prev_index = 0;
  std::size_t channels = 3;
  for (const Stage& stage : stages_) {
    if (stage.in_channels != channels) {
      throw std::invalid_argument("NetworkSpec: channel chain broken at " +
                                  (stage.layer.empty() ? std::string("pool") : stage.layer));
    }
    if (stage.kind == StageKind::conv) {
      unsigned block = 0, index = 0;
      if (!parse_conv_name(stage.layer, block, index)) {
        throw std::invalid_argument("NetworkSpec: bad layer name " + stage.layer);
      }
      const bool first = prev_block == 0 && block == 1 && index == 1;
      const bool next_in_block = block == prev_block && index == prev_index + 1;
      const bool next_block = prev_block != 0 && block == prev_block + 1 && index == 1;
      if (!(first || next_in_block || next_block)) {
        throw std::invalid_argument("NetworkSpec: layer " + stage.layer + " out of canonical order");
      }
      prev_block = block;
      prev_index = index;
    }
    channels = stage.out_channels;
  }
}

std::vector<std::string> NetworkSpec::conv_layers() const {
  std::vector<std::string> names;
  for (const Stage& s : stages_) {
    if (s.kind == StageKind::conv) names.push_back(s.layer);
  }
  return names;
}

bool NetworkSpec::has_layer(std::string_view name) const {
  return std::any_of(stages_.begin(), stages_.end(),
                     [&](const Stage& s) { return s.kind == StageKind::conv && s.layer == name; });
}

std::size_t NetworkSpec::feature_stage(std::string_view name) const {
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    if (stages_[i].kind == StageKind::relu && stages_[i].layer == name) return i;
  }
  throw std::invalid_argument("unknown layer name: " + std::string(name));
}

void NetworkSpec::check_weights(const NetworkWeights& weights) const {
  for (const Stage& s : stages_) {
    if (s.kind != StageKind::conv) continue;
    const ConvLayer* layer = weights.find(s.layer);
    if (layer == nullptr) throw std::invalid_argument("weights lack layer " + s.layer);
    if (layer->in_channels != s.in_channels || layer->out_channels != s.out_channels) {
      throw std::invalid_argument("weights for " + s.layer + " have shape " + std::to_string(layer->out_channels) +
                                  "x" + std::to_string(layer->in_channels) + ", network expects " +
                                  std::to_string(s.out_channels) + "x" + std::to_string(s.in_channels));
    }
    layer->validate();
  }
}

const Tensor3& ForwardTrace::feature(std::string_view layer) const {
  auto it = features_.find(layer);
  if (it == features_.end()) throw std::invalid_argument("layer " + std::string(layer) + " was not requested");
  return it->second;
}

FeatureBundle detach(const ForwardTrace& trace) { return trace.features(); }

FeatureExtractor::FeatureExtractor(NetworkWeights weights, NetworkSpec spec)
    : weights_(std::move(weights)), spec_(std::move(spec)) {
  spec_.check_weights(weights_);
  stage_layer_index_.assign(spec_.stages().size(), kNoLayer);
  for (std::size_t i = 0; i < spec_.stages().size(); ++i) {
    const Stage& s = spec_.stages()[i];
    if (s.kind != StageKind::conv) continue;
    for (std::size_t j = 0; j < weights_.layers.size(); ++j) {
      if (weights_.layers[j].name == s.layer) stage_layer_index_[i] = j;
    }
  }
}

FeatureExtractor::FeatureExtractor(NetworkWeights weights)
    : FeatureExtractor(weights, NetworkSpec::from_weights(weights)) {}

ForwardTrace FeatureExtractor::forward(const Tensor3& x, const std::set<std::string, std::less<>>& request) const {
  if (request.empty()) throw std::invalid_argument("forward: no layers requested");
  if (x.channels() != spec_.stages().front().in_channels) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.channels()) + " channels, expected " +
                                std::to_string(spec_.stages().front().in_channels));
  }
  std::size_t last = 0;
  for (const std::string& name : request) last = std::max(last, spec_.feature_stage(name));

  ForwardTrace trace;
  trace.input_shape_ = x.shape();
  trace.last_stage_ = last;
  trace.relu_inputs_.resize(last + 1);
  trace.pool_records_.resize(last + 1);

  Tensor3 act = x;
  for (std::size_t i = 0; i <= last; ++i) {
    const Stage& stage = spec_.stages()[i];
    switch (stage.kind) {
      case StageKind::conv:
        act = conv2d_forward(act, weights_.layers[stage_layer_index_[i]]);
        break;
      case StageKind::relu: {
        Tensor3 out = relu_forward(act);
        trace.relu_inputs_[i] = std::move(act);
        act = std::move(out);
        if (request.contains(stage.layer)) trace.features_.emplace(stage.layer, act);
        break;
      }
      case StageKind::pool: {
        PoolResult pooled = pool2x2_forward(act, spec_.pool_mode());
        trace.pool_records_[i] = std::move(pooled.record);
        act = std::move(pooled.output);
        break;
      }
    }
  }
  return trace;
}

Tensor3 FeatureExtractor::backward_to_input(const ForwardTrace& trace, const FeatureBundle& layer_grads) const {
  std::size_t start = 0;
  bool any = false;
  for (const auto& [name, grad] : layer_grads) {
    const Tensor3& feature = trace.feature(name);
    require_same_shape(grad.shape(), feature.shape(), ("backward_to_input at " + name).c_str());
    start = std::max(start, spec_.feature_stage(name));
    any = true;
  }
  if (!any) return Tensor3(trace.input_shape_);

  Tensor3 grad;
  for (std::size_t i = start + 1; i-- > 0;) {
    const Stage& stage = spec_.stages()[i];
    switch (stage.kind) {
      case StageKind::conv:
        grad = conv2d_backward_input(grad, weights_.layers[stage_layer_index_[i]]);
        break;
      case StageKind::relu: {
        if (auto it = layer_grads.find(stage.layer); it != layer_grads.end()) {
          if (grad.empty()) {
            grad = it->second;
          } else {
            grad += it->second;
          }
        }
        grad = relu_backward(grad, trace.relu_inputs_[i]);
        break;
      }
      case StageKind::pool:
        grad = pool2x2_backward(grad, trace.pool_records_[i]);
        break;
    }
  }
  return grad;
}

}  // namespace dtstyle
