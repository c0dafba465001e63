#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dtstyle/imageio.hpp"

namespace dtstyle {

// One flag per pixel, row-major; true marks the silhouette (foreground).
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<bool> bits;

  bool at(std::size_t x, std::size_t y) const { return bits[y * width + x]; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

// Per-pixel distance to the nearest silhouette pixel. Silhouette pixels hold
// exactly 0. `emphasis_power` is the exponent already applied (1 = raw).
struct DistanceField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
  int emphasis_power = 1;
  bool normalized = false;

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

inline constexpr double kDefaultThreshold = 0.5;

// Silhouette where Rec.601 luminance / 255 < threshold; `invert` flips the
// mask so the background becomes the silhouette.
BinaryMask binarize(const Image& img, double threshold = kDefaultThreshold, bool invert = false);

// Exact squared Euclidean distances (integers) between pixel centers.
// Throws std::invalid_argument if the mask has no silhouette pixel.
std::vector<std::int64_t> edt_squared(const BinaryMask& mask);
DistanceField edt(const BinaryMask& mask);

// Optionally divides by the image diagonal, then raises every non-silhouette
// value to the n-th power. Requires an unemphasized field and n >= 1.
DistanceField emphasize(const DistanceField& field, int n, bool normalize);

// Grayscale renderings for inspection: silhouette black on white, and the
// field min-max scaled with zero distance white and the farthest pixel black.
Image render_mask(const BinaryMask& mask);
Image render_field(const DistanceField& field);

}  // namespace dtstyle
