#pragma once

#include <string>

#include "qpf/engine/tensor.hpp"

namespace qpf::engine {

struct Activation {
  enum class Kind { Identity, ReLU, LeakyReLU };

  Kind kind = Kind::Identity;
  double alpha = 0.0;  // negative-side slope; LeakyReLU only

  static Activation identity() { return {}; }
  static Activation relu() { return {Kind::ReLU, 0.0}; }
  // alpha must lie in (0, 1).
  static Activation leaky_relu(double alpha = 0.01);

  // Slope applied to x <= 0. The subgradient at exactly 0 is this slope.
  double negative_slope() const;
  std::string name() const;
  bool operator==(const Activation&) const = default;
};

template <typename T>
Tensor<T> activation_forward(const Activation& act, const Tensor<T>& x);

// grad_out multiplied elementwise by the (sub)gradient at x.
template <typename T>
Tensor<T> activation_backward(const Activation& act, const Tensor<T>& x, const Tensor<T>& grad_out);

}  // namespace qpf::engine
