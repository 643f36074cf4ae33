#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "qpf/codec/plane.hpp"

namespace qpf::codec {

struct QuantizerConfig {
  std::size_t block_size = 8;
  int qp = 32;
  double offset = 0.5;

  // Throws std::invalid_argument on block_size < 2, qp outside [0, 63] or
  // offset outside [0, 0.5].
  void validate() const;
};

struct Quantized {
  std::int64_t level = 0;
  double value = 0.0;  // level * qstep
};

// level = sign(c) * floor(|c| / qstep + offset).
Quantized quantize_coeff(double c, double qstep, double offset);

// Zeroth-order entropy in bits per symbol of an integer sequence.
double entropy_bits(const std::vector<std::int64_t>& symbols);

struct EncodeResult {
  Plane recon;          // same size as the input, integer-valued in [0, 255]
  double rate_bits = 0.0;
  double dc_bits = 0.0;  // DC-level alphabet share of rate_bits
  double ac_bits = 0.0;  // AC-level alphabet share of rate_bits
  std::size_t coefficients = 0;
};

// Blockwise DCT, uniform quantization at qstep(qp), inverse DCT, clip and
// round. The image is edge-replicated to a multiple of the block size and the
// reconstruction cropped back. Rate is entropy(DC levels) * #DC +
// entropy(AC levels) * #AC over the padded image.
EncodeResult encode_decode(const Plane& image, const QuantizerConfig& cfg);

struct NoiseScanConfig {
  std::size_t block_size = 8;
  std::size_t blocks = 16384;  // per QP
  double signal_std = 1000.0;  // pixel std of the Gaussian test blocks
  double offset = 0.5;
  std::uint64_t seed = 1;
};

struct NoiseScanResult {
  std::vector<int> qps;
  std::vector<double> qsteps;
  std::vector<double> noise_variance;     // per QP, mean over all coefficients
  std::vector<double> uniform_ratio;      // noise_variance / (qstep^2 / 12)
  std::vector<double> signal_correlation;  // corr(coefficient, its quantization error)
  std::vector<std::vector<double>> bin_variance;  // [qp][bin]
  double slope = 0.0;  // of log(noise variance) against log(qstep)
  double intercept = 0.0;
  std::vector<double> bin_slopes;
  std::size_t coefficients_per_qp = 0;
};

// Quantizes seeded Gaussian test blocks at each QP (no pixel clipping, so
// the signal stays far from the all-zero regime) and regresses the
// quantization noise power on qstep in log-log space, overall and per
// frequency bin. Throws std::invalid_argument for fewer than 3 QPs or a
// zero-variance signal.
NoiseScanResult noise_power_scan(const std::vector<int>& qps, const NoiseScanConfig& cfg = {});

// Least-squares line through (x, y): returns {slope, intercept}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qpf::codec
