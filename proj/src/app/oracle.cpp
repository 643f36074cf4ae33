#include "qpf/app/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

#include "qpf/errors.hpp"

namespace qpf::app {

OracleSummary run_oracle(const OracleConfig& cfg) {
  OracleSummary s;

  wiener::SpectralModel quiet = wiener::random_spectrum(cfg.seed, cfg.bins);
  std::fill(quiet.noise.begin(), quiet.noise.end(), 0.0);
  const auto same = wiener::adapt_filter(quiet);
  s.zero_noise_identity = same == quiet.response;
  s.zero_noise_mse = wiener::expected_mse(quiet, same);
  s.zero_noise_identity = s.zero_noise_identity && s.zero_noise_mse == 0.0;

  s.optimality = wiener::check_optimality(cfg.seed, cfg.spectra, cfg.bins, cfg.perturbations);

  s.refinement_monotone = true;
  std::vector<std::size_t> bands;
  for (std::size_t b : cfg.band_counts) {
    if (b <= cfg.bins) bands.push_back(b);
  }
  for (std::size_t i = 0; i < cfg.spectra; ++i) {
    const auto m = wiener::smooth_spectrum(cfg.seed * 7919 + i, cfg.bins);
    auto devs = wiener::refinement_sweep(m, bands);
    for (std::size_t k = 1; k < devs.size(); ++k) {
      // Finest level may be exact (one bin per band), otherwise strictly smaller.
      if (!(devs[k] < devs[k - 1] || (devs[k] == 0.0 && devs[k - 1] == 0.0))) s.refinement_monotone = false;
    }
    s.refinement.push_back(std::move(devs));
  }

  codec::NoiseScanConfig scan_cfg;
  scan_cfg.blocks = cfg.scan_blocks;
  scan_cfg.seed = cfg.seed;
  s.scan = codec::noise_power_scan(cfg.scan_qps, scan_cfg);
  s.slope_ok = s.scan.slope >= 1.9 && s.scan.slope <= 2.1;
  s.bin_slopes_ok = std::all_of(s.scan.bin_slopes.begin(), s.scan.bin_slopes.end(),
                                [](double v) { return v >= 1.8 && v <= 2.2; });

  if (cfg.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir->string());
    wiener::write_report_csv(*cfg.out_dir / "oracle_spectrum.csv", wiener::random_spectrum(cfg.seed, cfg.bins));
    wiener::write_report_csv(*cfg.out_dir / "oracle_zero_noise.csv", quiet);

    std::ofstream ref(*cfg.out_dir / "oracle_refinement.csv");
    ref << "spectrum,bands,max_rel_deviation\n";
    for (std::size_t i = 0; i < s.refinement.size(); ++i) {
      for (std::size_t k = 0; k < bands.size(); ++k) ref << i << ',' << bands[k] << ',' << fmt::format("{}", s.refinement[i][k]) << '\n';
    }
    std::ofstream scan(*cfg.out_dir / "noise_scan.csv");
    scan << "qp,qstep,noise_variance,uniform_ratio,signal_correlation\n";
    for (std::size_t i = 0; i < s.scan.qps.size(); ++i) {
      scan << fmt::format("{},{},{},{},{}\n", s.scan.qps[i], s.scan.qsteps[i], s.scan.noise_variance[i],
                          s.scan.uniform_ratio[i], s.scan.signal_correlation[i]);
    }
    if (!ref || !scan) throw IoError("failed writing oracle reports in " + cfg.out_dir->string());
  }
  return s;
}

std::string format_oracle(const OracleSummary& s) {
  auto mark = [](bool ok) { return ok ? "ok" : "FAIL"; };
  std::string out;
  out += fmt::format("zero-noise identity      {:>4}  (mse {})\n", mark(s.zero_noise_identity), s.zero_noise_mse);
  out += fmt::format("optimality               {:>4}  ({} violations / {} perturbations, worst margin {:.3e}, "
                     "numeric gap {:.3e})\n",
                     mark(s.optimality_ok()), s.optimality.violations, s.optimality.perturbations,
                     s.optimality.worst_margin, s.optimality.max_numeric_gap);
  out += fmt::format("sub-band refinement      {:>4}  ({} spectra)\n", mark(s.refinement_monotone), s.refinement.size());
  const auto [lo, hi] = std::minmax_element(s.scan.bin_slopes.begin(), s.scan.bin_slopes.end());
  out += fmt::format("noise power slope        {:>4}  ({:.4f}, {} coefficients per QP)\n", mark(s.slope_ok),
                     s.scan.slope, s.scan.coefficients_per_qp);
  out += fmt::format("per-bin slopes           {:>4}  ([{:.4f}, {:.4f}])\n", mark(s.bin_slopes_ok), *lo, *hi);
  for (std::size_t i = 0; i < s.scan.qps.size(); ++i) {
    out += fmt::format("  qp {:>2}: noise/(q^2/12) = {:.4f}, corr(signal, noise) = {:+.4f}\n", s.scan.qps[i],
                       s.scan.uniform_ratio[i], s.scan.signal_correlation[i]);
  }
  return out;
}

}  // namespace qpf::app
