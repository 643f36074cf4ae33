#pragma once

#include "qpf/engine/tensor.hpp"

namespace qpf::engine {

template <typename T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;  // d(value)/d(pred)
};

// Mean squared error over all elements; grad = 2 (pred - target) / count.
// The loss value is accumulated in double in element order.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace qpf::engine
