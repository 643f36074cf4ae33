#include "qpf/engine/activation.hpp"

#include <stdexcept>

namespace qpf::engine {

Activation Activation::leaky_relu(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("LeakyReLU alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  return {Kind::LeakyReLU, alpha};
}

double Activation::negative_slope() const {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::ReLU: return 0.0;
    case Kind::LeakyReLU: return alpha;
  }
  return 1.0;
}

std::string Activation::name() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::ReLU: return "relu";
    case Kind::LeakyReLU: return "leaky_relu(" + std::to_string(alpha) + ")";
  }
  return "?";
}

template <typename T>
Tensor<T> activation_forward(const Activation& act, const Tensor<T>& x) {
  Tensor<T> out = x;
  if (act.kind == Activation::Kind::Identity) return out;
  const T slope = static_cast<T>(act.negative_slope());
  for (T& v : out.data()) {
    if (!(v > T{0})) v = act.kind == Activation::Kind::ReLU ? T{0} : v * slope;
  }
  require_finite(out, act.name());
  return out;
}

template <typename T>
Tensor<T> activation_backward(const Activation& act, const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x.shape(), grad_out.shape(), act.name() + " backward");
  Tensor<T> grad = grad_out;
  if (act.kind == Activation::Kind::Identity) return grad;
  const T slope = static_cast<T>(act.negative_slope());
  auto xs = x.data();
  auto gs = grad.data();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (!(xs[i] > T{0})) gs[i] *= slope;
  }
  require_finite(grad, act.name());
  return grad;
}

template Tensor<float> activation_forward(const Activation&, const Tensor<float>&);
template Tensor<double> activation_forward(const Activation&, const Tensor<double>&);
template Tensor<float> activation_backward(const Activation&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> activation_backward(const Activation&, const Tensor<double>&,
                                            const Tensor<double>&);

}  // namespace qpf::engine
