#include "dtstyle/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtstyle {

std::size_t BinaryMask::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true)); }

BinaryMask binarize(const Image& img, double threshold, bool invert) {
  BinaryMask mask{img.width(), img.height(), std::vector<bool>(img.width() * img.height())};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      const bool silhouette = luma / 255.0 < threshold;
      mask.bits[y * img.width() + x] = silhouette != invert;
    }
  }
  return mask;
}

// Meijster, Roerdink & Hesselink two-phase transform in integer arithmetic.
std::vector<std::int64_t> edt_squared(const BinaryMask& mask) {
  const auto m = static_cast<std::int64_t>(mask.width);
  const auto n = static_cast<std::int64_t>(mask.height);
  if (mask.bits.size() != mask.width * mask.height) throw std::invalid_argument("edt: mask size mismatch");
  if (mask.count() == 0) throw std::invalid_argument("edt: mask has no silhouette pixel; distance is undefined");

  // Phase 1: per column, vertical distance to the nearest silhouette pixel.
  const std::int64_t inf = m + n;
  std::vector<std::int64_t> g(mask.bits.size());
  for (std::int64_t x = 0; x < m; ++x) {
    g[x] = mask.bits[x] ? 0 : inf;
    for (std::int64_t y = 1; y < n; ++y) {
      g[y * m + x] = mask.bits[y * m + x] ? 0 : 1 + g[(y - 1) * m + x];
    }
    for (std::int64_t y = n - 2; y >= 0; --y) {
      if (g[(y + 1) * m + x] < g[y * m + x]) g[y * m + x] = 1 + g[(y + 1) * m + x];
    }
  }

  // Phase 2: per row, lower envelope of parabolas (x - i)^2 + g(i)^2.
  std::vector<std::int64_t> out(mask.bits.size());
  std::vector<std::int64_t> s(m), t(m);
  for (std::int64_t y = 0; y < n; ++y) {
    const std::int64_t* row = g.data() + y * m;
    auto f = [&](std::int64_t x, std::int64_t i) { return (x - i) * (x - i) + row[i] * row[i]; };
    auto sep = [&](std::int64_t i, std::int64_t u) {
      // Floor division; the numerator can be negative.
      const std::int64_t num = u * u - i * i + row[u] * row[u] - row[i] * row[i];
      const std::int64_t den = 2 * (u - i);
      return num >= 0 ? num / den : -((-num + den - 1) / den);
    };
    std::int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (std::int64_t u = 1; u < m; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t w = 1 + sep(s[q], u);
        if (w < m) {
          ++q;
          s[q] = u;
          t[q] = w;
        }
      }
    }
    for (std::int64_t u = m - 1; u >= 0; --u) {
      out[y * m + u] = f(u, s[q]);
      if (u == t[q]) --q;
    }
  }
  return out;
}

DistanceField edt(const BinaryMask& mask) {
  const std::vector<std::int64_t> sq = edt_squared(mask);
  DistanceField field{mask.width, mask.height, std::vector<double>(sq.size()), 1, false};
  for (std::size_t i = 0; i < sq.size(); ++i) field.values[i] = std::sqrt(static_cast<double>(sq[i]));
  return field;
}

DistanceField emphasize(const DistanceField& field, int n, bool normalize) {
  if (n < 1) throw std::invalid_argument("emphasize: power must be >= 1");
  if (field.emphasis_power != 1 || field.normalized) {
    throw std::invalid_argument("emphasize: field is already emphasized or normalized");
  }
  DistanceField out = field;
  out.emphasis_power = n;
  out.normalized = normalize;
  const double diagonal = std::hypot(static_cast<double>(field.width), static_cast<double>(field.height));
  for (double& v : out.values) {
    if (v == 0.0) continue;
    const double base = normalize ? v / diagonal : v;
    v = n == 1 ? base : std::pow(base, n);
  }
  return out;
}

Image render_mask(const BinaryMask& mask) {
  Image img(mask.width, mask.height, std::array<std::uint8_t, 3>{255, 255, 255});
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = 0;
    }
  }
  return img;
}

Image render_field(const DistanceField& field) {
  const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
  const double range = *hi - *lo;
  Image img(field.width, field.height, std::array<std::uint8_t, 3>{255, 255, 255});
  if (range <= 0.0) return img;
  for (std::size_t y = 0; y < field.height; ++y) {
    for (std::size_t x = 0; x < field.width; ++x) {
      const double scaled = (field.at(x, y) - *lo) / range;
      const auto v = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - scaled)));
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  }
  return img;
}

}  // namespace dtstyle
