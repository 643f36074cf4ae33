#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace qpf::wiener {

using Complex = std::complex<double>;

// Per-bin signal power S, noise power N and filter response W.
struct SpectralModel {
  std::vector<double> signal;
  std::vector<double> noise;
  std::vector<Complex> response;

  std::size_t bins() const { return signal.size(); }

  // Throws std::invalid_argument on empty or ragged arrays, or negative or
  // non-finite powers.
  void validate() const;
};

// 1 / (1 + |W|^2 N / S) per bin; 0 where S = 0 < N, 1 where S = N = 0.
std::vector<double> influence_factors(const SpectralModel& m);

// W'(f) = W(f) * influence factor.
std::vector<Complex> adapt_filter(const SpectralModel& m);

// sum_f |1 - V/W|^2 S + |V|^2 N. Throws std::domain_error if W = 0 at a bin
// with S > 0; bins with W = 0 and S = 0 contribute only |V|^2 N.
double expected_mse(const SpectralModel& m, const std::vector<Complex>& candidate);

// Minimizer of one bin's term for real W, found without the closed form:
// golden-section search on [min(0, W), max(0, W)], then bisection on the
// sign of the central-difference slope.
double minimize_bin(double signal, double noise, double response, double tol = 1e-13);

struct SubbandReport {
  std::vector<std::size_t> band_of_bin;
  std::vector<double> k;      // per band: mean |W|^2 / S
  std::vector<double> n;      // per band: mean N
  std::vector<double> factor;  // per band: 1 / (1 + k n)
  double max_rel_deviation = 0.0;   // over bins, against the exact per-bin factor
  double mean_rel_deviation = 0.0;
};

// Equal-width contiguous partition of `bins` bins into `bands` bands.
std::vector<std::size_t> uniform_partition(std::size_t bins, std::size_t bands);

// Approximates the factor with one constant per band. `band_of_bin` maps each
// bin to a band index; every band index below the maximum must be used.
SubbandReport subband_consistency(const SpectralModel& m, const std::vector<std::size_t>& band_of_bin);

// Independent uniform powers per bin, real positive W.
SpectralModel random_spectrum(std::uint64_t seed, std::size_t bins);
// Slowly varying spectra (exponential signal decay, linear noise tilt,
// low-pass W) with seeded coefficients.
SpectralModel smooth_spectrum(std::uint64_t seed, std::size_t bins);

struct OptimalityReport {
  std::size_t spectra = 0;
  std::size_t perturbations = 0;
  std::size_t violations = 0;        // perturbed candidates with lower expected MSE
  double max_numeric_gap = 0.0;      // max |W' - numeric minimizer| over all bins
  double worst_margin = 0.0;         // min over candidates of mse(V) - mse(W')
};

// Seeded optimality check: per spectrum, `perturbations` candidates
// V = W' (1 + d), |d| <= 0.1 per bin, plus per-bin numeric minimization.
OptimalityReport check_optimality(std::uint64_t seed, std::size_t spectra, std::size_t bins,
                                  std::size_t perturbations);

// Sub-band refinement sweep: max relative deviation for each band count.
std::vector<double> refinement_sweep(const SpectralModel& m, const std::vector<std::size_t>& band_counts);

// CSV with columns bin,S,N,W,W_prime,factor. Complex values print as a+bi
// when their imaginary part is nonzero.
void write_report_csv(const std::filesystem::path& path, const SpectralModel& m);

}  // namespace qpf::wiener
