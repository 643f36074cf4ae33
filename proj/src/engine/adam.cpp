#include "qpf/engine/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qpf/errors.hpp"

namespace qpf::engine {

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamMoments<T>& moments,
               const AdamConfig& cfg, std::uint64_t step) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (step == 0) throw std::invalid_argument("adam: step counter is 1-based");
  if (moments.m.size() != params.size()) {
    moments.m.assign(params.size(), T{});
    moments.v.assign(params.size(), T{});
  }
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T m_corr = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
  const T v_corr = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    T& m = moments.m[i];
    T& v = moments.v[i];
    m = b1 * m + (T{1} - b1) * g;
    v = b2 * v + (T{1} - b2) * g * g;
    const T m_hat = m / m_corr;
    const T v_hat = v / v_corr;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template <typename T>
void Adam<T>::step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: parameter and gradient lists differ in length");
  }
  if (moments_.empty()) {
    moments_.resize(params.size());
  } else if (moments_.size() != params.size()) {
    throw ShapeError("adam: parameter list changed between steps");
  }
  ++step_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!moments_[i].m.empty() && moments_[i].m.size() != params[i].size()) {
      throw ShapeError("adam: parameter " + std::to_string(i) + " changed size between steps");
    }
    adam_step(params[i], grads[i], moments_[i], cfg_, step_);
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamMoments<float>&,
                               const AdamConfig&, std::uint64_t);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamMoments<double>&,
                                const AdamConfig&, std::uint64_t);
template class Adam<float>;
template class Adam<double>;

}  // namespace qpf::engine
