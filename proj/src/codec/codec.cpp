#include "qpf/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "qpf/codec/dct.hpp"
#include "qpf/errors.hpp"
#include "qpf/modulation/modulation.hpp"

namespace qpf::codec {

void QuantizerConfig::validate() const {
  if (block_size < 2) throw std::invalid_argument("block size must be at least 2");
  if (qp < modulation::kMinQp || qp > modulation::kMaxQp) {
    throw std::invalid_argument("qp " + std::to_string(qp) + " outside [0, 63]");
  }
  if (!(offset >= 0.0 && offset <= 0.5)) throw std::invalid_argument("rounding offset must be in [0, 0.5]");
}

Quantized quantize_coeff(double c, double qstep, double offset) {
  if (!(qstep > 0.0)) throw std::invalid_argument("qstep must be positive");
  const double mag = std::floor(std::fabs(c) / qstep + offset);
  const auto level = static_cast<std::int64_t>(c < 0.0 ? -mag : mag);
  return Quantized{level, static_cast<double>(level) * qstep};
}

double entropy_bits(const std::vector<std::int64_t>& symbols) {
  if (symbols.empty()) return 0.0;
  std::map<std::int64_t, std::size_t> hist;
  for (auto s : symbols) ++hist[s];
  const double n = static_cast<double>(symbols.size());
  double h = 0.0;
  for (const auto& [sym, count] : hist) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

EncodeResult encode_decode(const Plane& image, const QuantizerConfig& cfg) {
  cfg.validate();
  if (image.empty()) throw std::invalid_argument("encode_decode: empty image");
  const std::size_t b = cfg.block_size;
  const std::size_t pw = (image.width + b - 1) / b * b;
  const std::size_t ph = (image.height + b - 1) / b * b;
  const Plane padded = pad_replicate(image, pw, ph);
  const double qstep = modulation::qstep_from_qp(cfg.qp);
  const BlockDct dct(b);

  Plane recon(pw, ph);
  std::vector<std::int64_t> dc_levels;
  std::vector<std::int64_t> ac_levels;
  std::vector<double> block(b * b);
  for (std::size_t by = 0; by < ph; by += b) {
    for (std::size_t bx = 0; bx < pw; bx += b) {
      for (std::size_t y = 0; y < b; ++y) {
        for (std::size_t x = 0; x < b; ++x) block[y * b + x] = padded.at(bx + x, by + y);
      }
      dct.forward(block, block);
      for (std::size_t k = 0; k < b * b; ++k) {
        const Quantized q = quantize_coeff(block[k], qstep, cfg.offset);
        (k == 0 ? dc_levels : ac_levels).push_back(q.level);
        block[k] = q.value;
      }
      dct.inverse(block, block);
      for (std::size_t y = 0; y < b; ++y) {
        for (std::size_t x = 0; x < b; ++x) recon.at(bx + x, by + y) = to_byte(block[y * b + x]);
      }
    }
  }

  EncodeResult r;
  r.recon = crop(recon, 0, 0, image.width, image.height);
  r.dc_bits = entropy_bits(dc_levels) * static_cast<double>(dc_levels.size());
  r.ac_bits = entropy_bits(ac_levels) * static_cast<double>(ac_levels.size());
  r.rate_bits = r.dc_bits + r.ac_bits;
  r.coefficients = dc_levels.size() + ac_levels.size();
  return r;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

NoiseScanResult noise_power_scan(const std::vector<int>& qps, const NoiseScanConfig& cfg) {
  if (qps.size() < 3) throw std::invalid_argument("noise_power_scan: need at least 3 QP values");
  if (!(cfg.signal_std > 0.0) || cfg.blocks == 0) {
    throw std::invalid_argument("noise_power_scan: degenerate (zero-variance) test signal");
  }
  const std::size_t b = cfg.block_size;
  const std::size_t bins = b * b;
  const BlockDct dct(b);

  // The same coefficient blocks are reused at every QP.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, cfg.signal_std);
  std::vector<double> coeffs(cfg.blocks * bins);
  std::vector<double> block(bins);
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    for (double& v : block) v = normal(rng);
    dct.forward(block, std::span<double>(coeffs).subspan(i * bins, bins));
  }

  NoiseScanResult r;
  r.qps = qps;
  r.coefficients_per_qp = coeffs.size();
  r.bin_slopes.assign(bins, 0.0);
  for (int qp : qps) {
    const double qstep = modulation::qstep_from_qp(qp);
    std::vector<double> bin_sum(bins, 0.0);
    double sc = 0.0, se = 0.0, scc = 0.0, see = 0.0, sce = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      const double c = coeffs[i];
      const double e = quantize_coeff(c, qstep, cfg.offset).value - c;
      bin_sum[i % bins] += e * e;
      sc += c;
      se += e;
      scc += c * c;
      see += e * e;
      sce += c * e;
    }
    const double n = static_cast<double>(coeffs.size());
    std::vector<double> bin_var(bins);
    for (std::size_t k = 0; k < bins; ++k) bin_var[k] = bin_sum[k] / static_cast<double>(cfg.blocks);
    const double var = see / n;
    if (!(var > 0.0)) throw std::invalid_argument("noise_power_scan: zero quantization noise at qp " + std::to_string(qp));
    const double cov = sce / n - (sc / n) * (se / n);
    const double vc = scc / n - (sc / n) * (sc / n);
    const double ve = see / n - (se / n) * (se / n);
    r.qsteps.push_back(qstep);
    r.noise_variance.push_back(var);
    r.uniform_ratio.push_back(var / (qstep * qstep / 12.0));
    r.signal_correlation.push_back(cov / std::sqrt(vc * ve));
    r.bin_variance.push_back(std::move(bin_var));
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < qps.size(); ++i) {
    lx.push_back(std::log(r.qsteps[i]));
    ly.push_back(std::log(r.noise_variance[i]));
  }
  std::tie(r.slope, r.intercept) = fit_line(lx, ly);
  for (std::size_t k = 0; k < bins; ++k) {
    std::vector<double> by;
    for (std::size_t i = 0; i < qps.size(); ++i) by.push_back(std::log(r.bin_variance[i][k]));
    r.bin_slopes[k] = fit_line(lx, by).first;
  }
  return r;
}

}  // namespace qpf::codec
