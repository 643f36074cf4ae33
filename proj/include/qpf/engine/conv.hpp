#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qpf/engine/tensor.hpp"

namespace qpf::engine {

// Stride-1, "same" zero-padded 2-D convolution layer geometry.
//
// `groups` splits input and output channels into independent groups;
// groups == in == out is a depthwise convolution.
struct ConvGeometry {
  std::size_t in = 1;
  std::size_t out = 1;
  std::size_t kh = 3;
  std::size_t kw = 3;
  std::size_t groups = 1;
  bool has_bias = true;

  std::size_t in_per_group() const { return in / groups; }
  std::size_t out_per_group() const { return out / groups; }
  std::size_t weight_count() const { return out * in_per_group() * kh * kw; }
  std::size_t bias_count() const { return has_bias ? out : 0; }
  std::size_t param_count() const { return weight_count() + bias_count(); }

  // Throws ShapeError on even or unsupported kernels and bad grouping.
  void validate(std::string_view layer) const;
  bool operator==(const ConvGeometry&) const = default;
};

template <typename T>
struct ConvParams {
  ConvGeometry geom;
  Tensor<T> weights;  // (out, in/groups, kh, kw)
  std::vector<T> bias;  // length out, or empty when !geom.has_bias

  ConvParams() = default;
  explicit ConvParams(const ConvGeometry& g)
      : geom(g),
        weights(Shape{g.out, g.in_per_group(), g.kh, g.kw}),
        bias(g.bias_count(), T{}) {}
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::vector<T> bias;
};

// Cross-correlation of the zero-padded input with the kernel, plus bias.
// Each output accumulates bias first, then (ci, ky, kx) in row-major order.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params,
                         std::string_view layer = "conv");

// Gradients of a scalar loss w.r.t. input, weights and bias, given dL/d(output).
// Weight gradients are summed over the batch in ascending sample order.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& grad_out, std::string_view layer = "conv");

}  // namespace qpf::engine
