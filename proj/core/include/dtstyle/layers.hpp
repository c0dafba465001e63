#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dtstyle/tensor.hpp"

namespace dtstyle {

inline constexpr std::size_t kKernelSize = 3;
inline constexpr std::size_t kKernelArea = kKernelSize * kKernelSize;

// 3x3 convolution, stride 1, zero padding 1. Kernel layout is
// out x in x 3 x 3, row-major.
struct ConvLayer {
  std::string name;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> kernel;
  std::vector<double> bias;

  double weight(std::size_t o, std::size_t c, std::size_t dy, std::size_t dx) const {
    return kernel[((o * in_channels + c) * kKernelSize + dy) * kKernelSize + dx];
  }

  // Throws std::invalid_argument if kernel or bias lengths disagree with the
  // channel counts.
  void validate() const;
};

enum class PoolMode { max, average };

// What pool2x2_backward needs to route gradients. For max pooling `argmax`
// holds, per output element, the flat index into the pooled input.
struct PoolRecord {
  PoolMode mode = PoolMode::max;
  Shape3 input_shape{};
  std::vector<std::size_t> argmax;

  Shape3 output_shape() const { return {input_shape.channels, input_shape.height / 2, input_shape.width / 2}; }
};

struct PoolResult {
  Tensor3 output;
  PoolRecord record;
};

Tensor3 conv2d_forward(const Tensor3& input, const ConvLayer& layer);
// Adjoint of conv2d_forward with respect to its input (bias does not enter).
Tensor3 conv2d_backward_input(const Tensor3& grad_out, const ConvLayer& layer);

Tensor3 relu_forward(const Tensor3& input);
// Passes gradient where forward_input > 0; the subgradient at 0 is 0.
Tensor3 relu_backward(const Tensor3& grad_out, const Tensor3& forward_input);

// Non-overlapping 2x2 pooling. Max ties go to the first cell in row-major
// scan order. Throws std::invalid_argument on odd height or width.
PoolResult pool2x2_forward(const Tensor3& input, PoolMode mode);
Tensor3 pool2x2_backward(const Tensor3& grad_out, const PoolRecord& record);

}  // namespace dtstyle
