#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qpf::metrics {

// 10 log10(peak^2 / mse); +infinity when mse == 0.
double psnr_from_mse(double mse, double peak = 255.0);

// PSNR of `test` against `reference`. Identical inputs give +infinity, a
// sentinel to be reported, not averaged. Throws ShapeError on size mismatch.
double psnr(std::span<const double> reference, std::span<const double> test, double peak = 255.0);
double psnr(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> test, double peak = 255.0);

struct RdPoint {
  double rate = 0.0;  // bits, > 0
  double psnr = 0.0;  // dB
};

struct BdResult {
  double value = 0.0;     // percent for BD-rate, dB for BD-PSNR
  double low = 0.0;       // integration interval
  double high = 0.0;
  std::vector<std::string> warnings;
};

// Bjontegaard delta rate: cubic least-squares fits of log10(rate) against
// PSNR, averaged over the overlapping PSNR range; 100 (10^avg - 1) percent.
// Negative means `test` needs fewer bits. Needs 4+ points per curve with
// positive, finite rates; curves are sorted by PSNR, and a rate that does not
// increase with PSNR is reported in `warnings`. Throws std::invalid_argument
// when the PSNR ranges do not overlap.
BdResult bd_rate_detailed(std::vector<RdPoint> anchor, std::vector<RdPoint> test);
double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test);

// Bjontegaard delta PSNR: fits PSNR against log10(rate), averaged over the
// overlapping log-rate range.
double bd_psnr(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test);

struct SweepPoint {
  int qp = 0;
  double psnr_anchor = 0.0;
  double psnr_filtered = 0.0;
  double rate_bits = 0.0;

  double gain_db() const { return psnr_filtered - psnr_anchor; }
  bool operator==(const SweepPoint&) const = default;
};

// Per-QP PSNR of the unfiltered reconstruction and of one model's output.
struct SweepCurve {
  std::string model;
  std::string mode;
  std::vector<SweepPoint> points;

  std::vector<int> qps() const;
  double mean_gain() const;
  std::vector<RdPoint> anchor_rd() const;
  std::vector<RdPoint> filtered_rd() const;
  bool operator==(const SweepCurve&) const = default;
};

// Schema model,mode,qp,psnr_anchor,psnr_filtered,gain_db,rate_bits; one row
// per (curve, qp). Values use shortest round-trip formatting.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCurve>& curves);
// Rows are grouped into curves by (model, mode) in order of first appearance.
std::vector<SweepCurve> read_sweep_csv(const std::filesystem::path& path);

}  // namespace qpf::metrics
