#pragma once

#include <cstddef>
#include <utility>

#include "qpf/engine/tensor.hpp"

namespace qpf::engine {

// Channel concatenation, a's channels first. a and b must agree on n, h, w.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// Inverse of concat_channels: the first `first_channels` channels, then the rest.
// Also the backward pass of concatenation.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, std::size_t first_channels);

template <typename T>
Tensor<T> residual_add(const Tensor<T>& a, const Tensor<T>& b);

// Both summands receive grad_out unchanged.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> residual_add_backward(const Tensor<T>& grad_out) {
  return {grad_out, grad_out};
}

}  // namespace qpf::engine
