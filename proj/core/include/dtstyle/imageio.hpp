#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtstyle/tensor.hpp"

namespace dtstyle {

// 8-bit RGB raster, row-major, three bytes per pixel.
class Image {
 public:
  Image() = default;
  // Throws std::invalid_argument for a zero dimension or a pixel buffer of
  // the wrong length.
  Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);
  Image(std::size_t width, std::size_t height, std::array<std::uint8_t, 3> fill);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels_[(y * width_ + x) * 3 + c]; }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels_[(y * width_ + x) * 3 + c]; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class ChannelOrder { rgb, bgr };

// Per-channel mean subtraction in tensor channel order. The default is the
// ImageNet BGR convention used by the classical VGG weights.
struct Preprocess {
  std::array<double, 3> channel_mean{103.939, 116.779, 123.68};
  ChannelOrder channel_order = ChannelOrder::bgr;

  // Throws std::invalid_argument when a mean lies outside [0, 255].
  void validate() const;

  bool operator==(const Preprocess&) const = default;
};

class ImageError : public std::runtime_error {
 public:
  enum class Kind { unreadable, unsupported_format, corrupt, write_failed };

  ImageError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// PNG or JPEG, sniffed from the file signature. Grayscale is replicated to
// RGB; alpha is composited over white.
Image load_image(const std::filesystem::path& path);
// 8-bit RGB, non-interlaced PNG.
void save_png(const std::filesystem::path& path, const Image& img);

// Bilinear resampling at pixel centers with edge clamping.
Image resize_bilinear(const Image& img, std::size_t new_width, std::size_t new_height);

Tensor3 to_tensor(const Image& img, const Preprocess& prep);
// Re-adds the mean, restores RGB order, clamps to [0, 255] and rounds half
// away from zero.
Image from_tensor(const Tensor3& t, const Preprocess& prep);

}  // namespace dtstyle
