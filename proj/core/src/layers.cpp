#include "dtstyle/layers.hpp"

#include <algorithm>
#include <stdexcept>

namespace dtstyle {

namespace {

// dst[y, x] += w * src[y + oy, x + ox] over every (y, x) whose source lies
// inside the plane; out-of-range sources are the zero padding.
void accumulate_shifted(std::span<double> dst, std::span<const double> src, std::size_t height, std::size_t width,
                        std::ptrdiff_t oy, std::ptrdiff_t ox, double w) {
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto wd = static_cast<std::ptrdiff_t>(width);
  const std::ptrdiff_t y_begin = std::max<std::ptrdiff_t>(0, -oy);
  const std::ptrdiff_t y_end = std::min(h, h - oy);
  const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(0, -ox);
  const std::ptrdiff_t x_end = std::min(wd, wd - ox);
  for (std::ptrdiff_t y = y_begin; y < y_end; ++y) {
    double* d = dst.data() + y * wd;
    const double* s = src.data() + (y + oy) * wd + ox;
    for (std::ptrdiff_t x = x_begin; x < x_end; ++x) d[x] += w * s[x];
  }
}

}  // namespace

void ConvLayer::validate() const {
  if (in_channels == 0 || out_channels == 0) throw std::invalid_argument("ConvLayer " + name + ": zero channel count");
  if (kernel.size() != out_channels * in_channels * kKernelArea) {
    throw std::invalid_argument("ConvLayer " + name + ": kernel length does not match " +
                                std::to_string(out_channels) + "x" + std::to_string(in_channels) + "x3x3");
  }
  if (bias.size() != out_channels) throw std::invalid_argument("ConvLayer " + name + ": bias length mismatch");
}

Tensor3 conv2d_forward(const Tensor3& input, const ConvLayer& layer) {
  if (input.channels() != layer.in_channels) {
    throw std::invalid_argument("conv2d_forward(" + layer.name + "): input has " + std::to_string(input.channels()) +
                                " channels, layer expects " + std::to_string(layer.in_channels));
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  Tensor3 out(layer.out_channels, h, w);
  for (std::size_t o = 0; o < layer.out_channels; ++o) {
    std::span<double> dst = out.channel(o);
    std::fill(dst.begin(), dst.end(), layer.bias[o]);
    for (std::size_t c = 0; c < layer.in_channels; ++c) {
      for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
        for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
          const double k = layer.weight(o, c, dy, dx);
          if (k == 0.0) continue;
          accumulate_shifted(dst, input.channel(c), h, w, static_cast<std::ptrdiff_t>(dy) - 1,
                             static_cast<std::ptrdiff_t>(dx) - 1, k);
        }
      }
    }
  }
  return out;
}

Tensor3 conv2d_backward_input(const Tensor3& grad_out, const ConvLayer& layer) {
  if (grad_out.channels() != layer.out_channels) {
    throw std::invalid_argument("conv2d_backward_input(" + layer.name + "): gradient has " +
                                std::to_string(grad_out.channels()) + " channels, layer produces " +
                                std::to_string(layer.out_channels));
  }
  const std::size_t h = grad_out.height();
  const std::size_t w = grad_out.width();
  Tensor3 grad_in(layer.in_channels, h, w);
  // grad_in[c, y, x] = sum_o sum_{dy,dx} grad_out[o, y - dy + 1, x - dx + 1] * k[o, c, dy, dx]
  for (std::size_t c = 0; c < layer.in_channels; ++c) {
    std::span<double> dst = grad_in.channel(c);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
      for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
        for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
          const double k = layer.weight(o, c, dy, dx);
          if (k == 0.0) continue;
          accumulate_shifted(dst, grad_out.channel(o), h, w, 1 - static_cast<std::ptrdiff_t>(dy),
                             1 - static_cast<std::ptrdiff_t>(dx), k);
        }
      }
    }
  }
  return grad_in;
}

Tensor3 relu_forward(const Tensor3& input) {
  Tensor3 out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor3 relu_backward(const Tensor3& grad_out, const Tensor3& forward_input) {
  require_same_shape(grad_out.shape(), forward_input.shape(), "relu_backward");
  Tensor3 grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[i] = forward_input[i] > 0.0 ? grad_out[i] : 0.0;
  return grad_in;
}

PoolResult pool2x2_forward(const Tensor3& input, PoolMode mode) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0) {
    throw std::invalid_argument("pool2x2_forward: odd spatial size " + to_string(input.shape()));
  }
  PoolResult result;
  result.record.mode = mode;
  result.record.input_shape = input.shape();
  const Shape3 out_shape = result.record.output_shape();
  result.output = Tensor3(out_shape);
  if (mode == PoolMode::max) result.record.argmax.resize(out_shape.volume());

  const std::size_t w = input.width();
  std::size_t out_index = 0;
  for (std::size_t c = 0; c < out_shape.channels; ++c) {
    const std::size_t base = c * input.shape().plane();
    for (std::size_t oy = 0; oy < out_shape.height; ++oy) {
      for (std::size_t ox = 0; ox < out_shape.width; ++ox, ++out_index) {
        const std::size_t cells[4] = {
            base + (2 * oy) * w + 2 * ox,
            base + (2 * oy) * w + 2 * ox + 1,
            base + (2 * oy + 1) * w + 2 * ox,
            base + (2 * oy + 1) * w + 2 * ox + 1,
        };
        if (mode == PoolMode::max) {
          std::size_t best = cells[0];
          for (std::size_t k = 1; k < 4; ++k) {
            if (input[cells[k]] > input[best]) best = cells[k];
          }
          result.output[out_index] = input[best];
          result.record.argmax[out_index] = best;
        } else {
          result.output[out_index] =
              0.25 * (input[cells[0]] + input[cells[1]] + input[cells[2]] + input[cells[3]]);
        }
      }
    }
  }
  return result;
}

Tensor3 pool2x2_backward(const Tensor3& grad_out, const PoolRecord& record) {
  require_same_shape(grad_out.shape(), record.output_shape(), "pool2x2_backward");
  Tensor3 grad_in(record.input_shape);
  if (record.mode == PoolMode::max) {
    if (record.argmax.size() != grad_out.size()) throw std::invalid_argument("pool2x2_backward: record size mismatch");
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[record.argmax[i]] += grad_out[i];
    return grad_in;
  }
  const std::size_t w = record.input_shape.width;
  const Shape3 out_shape = record.output_shape();
  std::size_t out_index = 0;
  for (std::size_t c = 0; c < out_shape.channels; ++c) {
    const std::size_t base = c * record.input_shape.plane();
    for (std::size_t oy = 0; oy < out_shape.height; ++oy) {
      for (std::size_t ox = 0; ox < out_shape.width; ++ox, ++out_index) {
        const double g = 0.25 * grad_out[out_index];
        grad_in[base + (2 * oy) * w + 2 * ox] += g;
        grad_in[base + (2 * oy) * w + 2 * ox + 1] += g;
        grad_in[base + (2 * oy + 1) * w + 2 * ox] += g;
        grad_in[base + (2 * oy + 1) * w + 2 * ox + 1] += g;
      }
    }
  }
  return grad_in;
}

}  // namespace dtstyle
