#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpf/codec/codec.hpp"
#include "qpf/wiener/wiener.hpp"

namespace qpf::app {

struct OracleConfig {
  std::size_t bins = 64;
  std::uint64_t seed = 1;
  std::size_t spectra = 20;
  std::size_t perturbations = 100;
  std::vector<std::size_t> band_counts = {2, 4, 8, 16, 32, 64};
  std::vector<int> scan_qps = {22, 27, 32, 37};
  std::size_t scan_blocks = 16384;
  std::optional<std::filesystem::path> out_dir;  // CSV reports when set
};

struct OracleSummary {
  double zero_noise_mse = 0.0;
  bool zero_noise_identity = false;
  wiener::OptimalityReport optimality;
  std::vector<std::vector<double>> refinement;  // per smooth spectrum, per band count
  bool refinement_monotone = false;
  codec::NoiseScanResult scan;
  bool slope_ok = false;
  bool bin_slopes_ok = false;

  bool optimality_ok() const { return optimality.violations == 0 && optimality.max_numeric_gap <= 1e-8; }
  bool passed() const {
    return zero_noise_identity && optimality_ok() && refinement_monotone && slope_ok && bin_slopes_ok;
  }
};

// Zero-noise identity, optimality against perturbations and per-bin numeric
// minimization, sub-band refinement, and the quantization noise scan.
OracleSummary run_oracle(const OracleConfig& cfg);

std::string format_oracle(const OracleSummary& s);

}  // namespace qpf::app
