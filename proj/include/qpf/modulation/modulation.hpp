#pragma once

#include <span>
#include <vector>

#include "qpf/engine/tensor.hpp"

namespace qpf::modulation {

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 63;

// Quantization step of the HEVC/VVC QP law: 2^((qp - 4) / 6).
double qstep_from_qp(int qp);

// Normalized squared step 2^((qp - 32) / 3) = qstep^2 / 2^(28/3).
// Used in place of qstep^2 so the trainable scale stays near 1 around QP 32.
double qsq_norm_from_qp(int qp);

// Per-picture quantization context shared by every modulated layer.
struct QpContext {
  int qp = 32;
  double qstep = 1.0;
  double qsq_norm = 1.0;

  // Throws std::out_of_range unless qp is in [0, 63].
  static QpContext from_qp(int qp);
};

// Per-output-channel influence strengths of one convolution layer; theta >= 0.
template <typename T>
struct ModulationParams {
  std::vector<T> theta;
};

// Influence factor 1 / (1 + theta * q). Lies in (0, 1] for theta, q >= 0.
double influence_factor(double theta, double qsq_norm);

// out[n,c,y,x] = x[n,c,y,x] / (1 + theta[c] * q), q = ctx.qsq_norm.
template <typename T>
engine::Tensor<T> modulate_forward(const engine::Tensor<T>& x, std::span<const T> theta,
                                   const QpContext& ctx);

template <typename T>
struct ModulationGrads {
  engine::Tensor<T> x;
  std::vector<T> theta;
};

// grad_x = g / (1 + theta_c q);  grad_theta_c = sum_{n,y,x} g * (-x q / (1 + theta_c q)^2).
template <typename T>
ModulationGrads<T> modulate_backward(const engine::Tensor<T>& x, std::span<const T> theta,
                                     const QpContext& ctx, const engine::Tensor<T>& grad_out);

// Projection onto theta >= 0, applied after every optimizer step.
template <typename T>
void clamp_theta(std::span<T> theta);

}  // namespace qpf::modulation
