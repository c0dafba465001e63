#include "dtstyle/weights_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace dtstyle {

namespace {

static_assert(std::endian::native == std::endian::little, "weight I/O assumes a little-endian host");

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw WeightFileError(WeightFileErrc::truncated,
                            std::string("file ends inside ") + what + " at byte " + std::to_string(pos_));
    }
  }

  template <typename T>
  T read(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string read_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void read_floats(std::vector<double>& out, std::size_t count, const char* what) {
    need(count * sizeof(float), what);
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, bytes_.data() + pos_ + i * sizeof(float), sizeof(float));
      out[i] = f;
    }
    pos_ += count * sizeof(float);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

std::string_view to_string(WeightFileErrc code) {
  switch (code) {
    case WeightFileErrc::unreadable: return "unreadable";
    case WeightFileErrc::truncated: return "truncated";
    case WeightFileErrc::bad_magic: return "bad-magic";
    case WeightFileErrc::version_mismatch: return "version-mismatch";
    case WeightFileErrc::malformed: return "malformed";
    case WeightFileErrc::checksum_mismatch: return "checksum-mismatch";
    case WeightFileErrc::shape_mismatch: return "shape-mismatch";
  }
  return "unknown";
}

const ConvLayer* NetworkWeights::find(std::string_view name) const {
  auto it = std::find_if(layers.begin(), layers.end(), [&](const ConvLayer& l) { return l.name == name; });
  return it == layers.end() ? nullptr : &*it;
}

const ConvLayer& NetworkWeights::at(std::string_view name) const {
  const ConvLayer* layer = find(name);
  if (layer == nullptr) throw std::out_of_range("no conv layer named " + std::string(name));
  return *layer;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

NetworkWeights parse_weights(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const std::string magic = in.read_string(8, "magic");
  if (magic.compare(0, kWeightMagicPrefix.size(), kWeightMagicPrefix) != 0) {
    throw WeightFileError(WeightFileErrc::bad_magic, "not a CNSTW weight file");
  }
  if (magic.compare(kWeightMagicPrefix.size(), kWeightVersion.size(), kWeightVersion) != 0) {
    throw WeightFileError(WeightFileErrc::version_mismatch,
                          "format version " + magic.substr(kWeightMagicPrefix.size()) + ", expected " +
                              std::string(kWeightVersion));
  }

  const auto layer_count = in.read<std::uint32_t>("layer count");
  NetworkWeights weights;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    ConvLayer layer;
    const auto name_len = in.read<std::uint16_t>("layer name length");
    layer.name = in.read_string(name_len, "layer name");
    const auto out_ch = in.read<std::uint32_t>("layer header");
    const auto in_ch = in.read<std::uint32_t>("layer header");
    const auto kh = in.read<std::uint32_t>("layer header");
    const auto kw = in.read<std::uint32_t>("layer header");
    const std::uint64_t kernel_count = std::uint64_t{out_ch} * in_ch * kh * kw;
    if (kernel_count * sizeof(float) > in.remaining()) {
      throw WeightFileError(WeightFileErrc::truncated, "file ends inside kernel of " + layer.name);
    }
    in.read_floats(layer.kernel, static_cast<std::size_t>(kernel_count), "kernel");
    in.read_floats(layer.bias, out_ch, "bias");
    if (kh != kKernelSize || kw != kKernelSize) {
      throw WeightFileError(WeightFileErrc::shape_mismatch, layer.name + " has a " + std::to_string(kh) + "x" +
                                                                std::to_string(kw) + " kernel; only 3x3 is supported");
    }
    layer.out_channels = out_ch;
    layer.in_channels = in_ch;
    weights.layers.push_back(std::move(layer));
  }

  const std::size_t payload_end = in.offset();
  const auto stored_crc = in.read<std::uint32_t>("checksum");
  if (in.remaining() != 0) {
    throw WeightFileError(WeightFileErrc::malformed, std::to_string(in.remaining()) + " trailing bytes after checksum");
  }
  const std::uint32_t actual_crc = crc32_of(bytes.first(payload_end));
  if (actual_crc != stored_crc) throw WeightFileError(WeightFileErrc::checksum_mismatch, "CRC-32 does not match");

  if (weights.layers.empty()) throw WeightFileError(WeightFileErrc::malformed, "file contains no layers");
  std::size_t expected_in = 3;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const ConvLayer& layer = weights.layers[i];
    if (layer.name.empty()) throw WeightFileError(WeightFileErrc::malformed, "empty layer name");
    for (std::size_t j = 0; j < i; ++j) {
      if (weights.layers[j].name == layer.name) {
        throw WeightFileError(WeightFileErrc::malformed, "duplicate layer name " + layer.name);
      }
    }
    if (layer.in_channels != expected_in || layer.out_channels == 0) {
      throw WeightFileError(WeightFileErrc::shape_mismatch, layer.name + " expects " +
                                                                std::to_string(layer.in_channels) +
                                                                " input channels, previous layer gives " +
                                                                std::to_string(expected_in));
    }
    expected_in = layer.out_channels;
  }
  return weights;
}

NetworkWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(WeightFileErrc::unreadable, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_weights(bytes);
}

std::vector<std::uint8_t> serialize_weights(const NetworkWeights& weights) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kWeightMagicPrefix.begin(), kWeightMagicPrefix.end());
  out.insert(out.end(), kWeightVersion.begin(), kWeightVersion.end());
  append(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const ConvLayer& layer : weights.layers) {
    layer.validate();
    append(out, static_cast<std::uint16_t>(layer.name.size()));
    out.insert(out.end(), layer.name.begin(), layer.name.end());
    append(out, static_cast<std::uint32_t>(layer.out_channels));
    append(out, static_cast<std::uint32_t>(layer.in_channels));
    append(out, static_cast<std::uint32_t>(kKernelSize));
    append(out, static_cast<std::uint32_t>(kKernelSize));
    for (double v : layer.kernel) append(out, static_cast<float>(v));
    for (double v : layer.bias) append(out, static_cast<float>(v));
  }
  append(out, crc32_of(out));
  return out;
}

void save_weights(const std::filesystem::path& path, const NetworkWeights& weights) {
  const std::vector<std::uint8_t> bytes = serialize_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightFileError(WeightFileErrc::unreadable, "cannot write " + path.string());
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(WeightFileErrc::unreadable, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return crc32_of(bytes);
}

}  // namespace dtstyle
