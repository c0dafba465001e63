#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtstyle/layers.hpp"

namespace dtstyle {

// Conv layers in file (and therefore network) order.
struct NetworkWeights {
  std::vector<ConvLayer> layers;

  const ConvLayer* find(std::string_view name) const;
  const ConvLayer& at(std::string_view name) const;
};

enum class WeightFileErrc {
  unreadable,
  truncated,
  bad_magic,
  version_mismatch,
  malformed,
  checksum_mismatch,
  shape_mismatch,
};

std::string_view to_string(WeightFileErrc code);

class WeightFileError : public std::runtime_error {
 public:
  WeightFileError(WeightFileErrc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}
  WeightFileErrc code() const { return code_; }

 private:
  WeightFileErrc code_;
};

// CNSTW001 layout, little-endian:
//   "CNSTW001" | u32 layer_count |
//   per layer: u16 name_len, name, u32 out, u32 in, u32 kh, u32 kw,
//              f32 kernel[out*in*kh*kw], f32 bias[out] |
//   u32 crc32 of every preceding byte
inline constexpr std::string_view kWeightMagicPrefix = "CNSTW";
inline constexpr std::string_view kWeightVersion = "001";

// Structure is parsed before the checksum is checked, so a short file reports
// `truncated` rather than `checksum_mismatch`. Layers must be 3x3 and their
// channel counts must chain starting from 3 input channels.
NetworkWeights parse_weights(std::span<const std::uint8_t> bytes);
NetworkWeights load_weights(const std::filesystem::path& path);

// Kernel and bias values are narrowed to float32.
std::vector<std::uint8_t> serialize_weights(const NetworkWeights& weights);
void save_weights(const std::filesystem::path& path, const NetworkWeights& weights);

// Standard CRC-32 (IEEE 802.3) of a whole file, as used for manifest hashes.
std::uint32_t file_crc32(const std::filesystem::path& path);
std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace dtstyle
