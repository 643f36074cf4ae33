#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qpf/wiener/wiener.hpp"

using namespace qpf::wiener;

namespace {

SpectralModel constant_model(std::size_t bins, double s, double n, double w) {
  return {std::vector<double>(bins, s), std::vector<double>(bins, n), std::vector<Complex>(bins, Complex(w, 0.0))};
}

}  // namespace

TEST(Wiener, ZeroNoiseIsIdentity) {
  auto m = random_spectrum(3, 32);
  std::fill(m.noise.begin(), m.noise.end(), 0.0);
  EXPECT_EQ(adapt_filter(m), m.response);
  EXPECT_EQ(expected_mse(m, m.response), 0.0);
}

TEST(Wiener, HalfFactorExample) {
  auto m = constant_model(8, 2.0, 2.0, 1.0);
  m.response[3] = Complex(0.0, 1.0);  // |W| = 1 as well
  const auto w = adapt_filter(m);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(std::abs(w[i] - m.response[i] / 2.0), 0.0, 1e-15);
  }
}

TEST(Wiener, ZeroCandidateLosesAllSignal) {
  const auto m = random_spectrum(5, 16);
  double total = 0.0;
  for (double s : m.signal) total += s;
  EXPECT_NEAR(expected_mse(m, std::vector<Complex>(16)), total, 1e-12 * total);
}

TEST(Wiener, DegenerateBins) {
  SpectralModel m{{0.0, 0.0, 1.0}, {1.0, 0.0, 1.0}, {Complex(1, 0), Complex(2, 0), Complex(1, 0)}};
  const auto f = influence_factors(m);
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 1.0);
  EXPECT_EQ(f[2], 0.5);
  SpectralModel bad{{1.0}, {0.0}, {Complex(0, 0)}};
  EXPECT_THROW(expected_mse(bad, {Complex(1, 0)}), std::domain_error);
  SpectralModel negative{{-1.0}, {0.0}, {Complex(1, 0)}};
  EXPECT_THROW(negative.validate(), std::invalid_argument);
}

TEST(Wiener, FactorRangeAndMonotoneAttenuation) {
  auto m = random_spectrum(8, 64);
  for (double f : influence_factors(m)) {
    EXPECT_GT(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  const auto base = adapt_filter(m);
  for (auto& n : m.noise) n *= 1.5;
  const auto more = adapt_filter(m);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_LE(std::abs(more[i]), std::abs(base[i]));
}

TEST(Wiener, ClosedFormMatchesNumericMinimizer) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_spectrum(seed, 64);
    const auto w = adapt_filter(m);
    for (std::size_t i = 0; i < m.bins(); ++i) {
      EXPECT_NEAR(minimize_bin(m.signal[i], m.noise[i], m.response[i].real()), w[i].real(), 1e-8);
    }
  }
}

TEST(Wiener, OptimalityAgainstPerturbations) {
  const auto r = check_optimality(1, 20, 64, 100);
  EXPECT_EQ(r.spectra, 20u);
  EXPECT_EQ(r.perturbations, 2000u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.max_numeric_gap, 1e-8);
  EXPECT_GT(r.worst_margin, 0.0);
}

TEST(Wiener, ComplexResponseStillOptimal) {
  auto m = random_spectrum(12, 16);
  for (std::size_t i = 0; i < m.bins(); ++i) m.response[i] *= std::polar(1.0, 0.3 * static_cast<double>(i));
  const auto w = adapt_filter(m);
  const double best = expected_mse(m, w);
  for (double d : {-0.05, 0.05}) {
    for (std::size_t i = 0; i < m.bins(); ++i) {
      auto v = w;
      v[i] *= 1.0 + d;
      EXPECT_GT(expected_mse(m, v), best);
      v = w;
      v[i] *= std::polar(1.0, d);
      EXPECT_GT(expected_mse(m, v), best);
    }
  }
}

TEST(Subband, OneBinPerBandIsExact) {
  const auto m = random_spectrum(2, 32);
  EXPECT_LE(subband_consistency(m, uniform_partition(32, 32)).max_rel_deviation, 1e-15);
}

TEST(Subband, ConstantWithinBandsIsExact) {
  SpectralModel m = constant_model(16, 1.0, 0.5, 1.0);
  for (std::size_t i = 8; i < 16; ++i) {
    m.signal[i] = 3.0;
    m.noise[i] = 2.0;
    m.response[i] = Complex(0.4, 0.0);
  }
  EXPECT_NEAR(subband_consistency(m, uniform_partition(16, 2)).max_rel_deviation, 0.0, 1e-15);
}

TEST(Subband, FactorsHaveTheBandForm) {
  const auto m = smooth_spectrum(4, 64);
  const auto r = subband_consistency(m, uniform_partition(64, 8));
  ASSERT_EQ(r.factor.size(), 8u);
  for (std::size_t b = 0; b < 8; ++b) EXPECT_DOUBLE_EQ(r.factor[b], 1.0 / (1.0 + r.k[b] * r.n[b]));
}

TEST(Subband, RefinementIsMonotoneOnSmoothSpectra) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto devs = refinement_sweep(smooth_spectrum(seed, 64), {2, 4, 8, 16, 32, 64});
    for (std::size_t k = 1; k < devs.size(); ++k) EXPECT_LT(devs[k], devs[k - 1]) << seed << " " << k;
    EXPECT_LE(devs.back(), 1e-15);
  }
}

TEST(Subband, PartitionShape) {
  const auto p = uniform_partition(10, 3);
  EXPECT_EQ(p.size(), 10u);
  EXPECT_EQ(p.front(), 0u);
  EXPECT_EQ(p.back(), 2u);
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LE(p[i - 1], p[i]);
  EXPECT_THROW(uniform_partition(4, 5), std::invalid_argument);
  EXPECT_THROW(subband_consistency(random_spectrum(1, 4), {0, 0, 2, 2}), std::invalid_argument);
}

TEST(Report, CsvColumns) {
  const auto path = std::filesystem::temp_directory_path() / "qpf_wiener_report.csv";
  write_report_csv(path, random_spectrum(1, 4));
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "bin,S,N,W,W_prime,factor");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4u);
  std::filesystem::remove(path);
}
