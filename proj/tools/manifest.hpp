#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtstyle/imageio.hpp"
#include "dtstyle/layers.hpp"
#include "dtstyle/optimizer.hpp"

namespace dtstyle::cli {

// Every parameter of one generation run. Serialized as flat `key = value`
// lines; `#` starts a comment line.
struct RunManifest {
  std::filesystem::path content;
  std::filesystem::path style;
  std::filesystem::path out = "out";
  std::filesystem::path weights;
  std::optional<std::uint32_t> weights_hash;

  std::size_t width = 256;
  std::size_t height = 256;

  double threshold = 0.5;
  bool invert = false;
  bool normalize_distance = true;

  double alpha = 0.001;
  double beta = 1.0;
  double gamma = 1e4;
  int power = 2;

  std::string content_layer = "conv4_2";
  std::vector<std::string> style_layers{"conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"};
  // Empty means uniform 1 / style_layers.size().
  std::vector<double> style_weights;

  PoolMode pool = PoolMode::max;
  Preprocess preprocess;
  OptimConfig optim;

  bool operator==(const RunManifest&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunManifest parse_manifest(std::string_view text);
RunManifest load_manifest(const std::filesystem::path& path);
std::string to_text(const RunManifest& manifest);

// Applies a single `key = value` assignment; throws ManifestError for an
// unknown key or unparsable value.
void set_field(RunManifest& manifest, std::string_view key, std::string_view value);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace dtstyle::cli
