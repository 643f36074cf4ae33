#include "qpf/modulation/modulation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qpf::modulation {
namespace {

void check_qp(int qp) {
  if (qp < kMinQp || qp > kMaxQp) {
    throw std::out_of_range("qp " + std::to_string(qp) + " outside [0, 63]");
  }
}

template <typename T>
void check_theta(const engine::Tensor<T>& x, std::span<const T> theta) {
  if (theta.size() != x.shape().c) {
    throw ShapeError("modulation: " + std::to_string(theta.size()) + " theta values for " +
                     std::to_string(x.shape().c) + " channels");
  }
  for (T t : theta) {
    if (!(t >= T{0})) throw std::invalid_argument("modulation: theta must be nonnegative");
  }
}

}  // namespace

double qstep_from_qp(int qp) {
  check_qp(qp);
  return std::exp2((qp - 4) / 6.0);
}

double qsq_norm_from_qp(int qp) {
  check_qp(qp);
  return std::exp2((qp - 32) / 3.0);
}

QpContext QpContext::from_qp(int qp) {
  return QpContext{qp, qstep_from_qp(qp), qsq_norm_from_qp(qp)};
}

double influence_factor(double theta, double qsq_norm) { return 1.0 / (1.0 + theta * qsq_norm); }

template <typename T>
engine::Tensor<T> modulate_forward(const engine::Tensor<T>& x, std::span<const T> theta,
                                   const QpContext& ctx) {
  check_theta(x, theta);
  const auto s = x.shape();
  const T q = static_cast<T>(ctx.qsq_norm);
  engine::Tensor<T> out(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T denom = T{1} + theta[c] * q;
      const T* src = x.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] = src[i] / denom;
    }
  }
  engine::require_finite(out, "modulation");
  return out;
}

template <typename T>
ModulationGrads<T> modulate_backward(const engine::Tensor<T>& x, std::span<const T> theta,
                                     const QpContext& ctx, const engine::Tensor<T>& grad_out) {
  check_theta(x, theta);
  engine::require_same_shape(x.shape(), grad_out.shape(), "modulation backward");
  const auto s = x.shape();
  const T q = static_cast<T>(ctx.qsq_norm);
  ModulationGrads<T> grads{engine::Tensor<T>(s), std::vector<T>(s.c, T{})};
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T denom = T{1} + theta[c] * q;
      const T dtheta_scale = -q / (denom * denom);
      const T* xs = x.plane(n, c);
      const T* go = grad_out.plane(n, c);
      T* gx = grads.x.plane(n, c);
      T acc = grads.theta[c];
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gx[i] = go[i] / denom;
        acc += go[i] * xs[i] * dtheta_scale;
      }
      grads.theta[c] = acc;
    }
  }
  engine::require_finite(grads.x, "modulation backward");
  engine::require_finite(std::span<const T>(grads.theta), "modulation backward");
  return grads;
}

template <typename T>
void clamp_theta(std::span<T> theta) {
  for (T& t : theta) {
    if (t < T{0}) t = T{0};
  }
}

template engine::Tensor<float> modulate_forward(const engine::Tensor<float>&, std::span<const float>,
                                                const QpContext&);
template engine::Tensor<double> modulate_forward(const engine::Tensor<double>&, std::span<const double>,
                                                 const QpContext&);
template ModulationGrads<float> modulate_backward(const engine::Tensor<float>&, std::span<const float>,
                                                  const QpContext&, const engine::Tensor<float>&);
template ModulationGrads<double> modulate_backward(const engine::Tensor<double>&,
                                                   std::span<const double>, const QpContext&,
                                                   const engine::Tensor<double>&);
template void clamp_theta<float>(std::span<float>);
template void clamp_theta<double>(std::span<double>);

}  // namespace qpf::modulation
