#include "qpf/wiener/wiener.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "qpf/errors.hpp"

namespace qpf::wiener {

void SpectralModel::validate() const {
  if (signal.empty()) throw std::invalid_argument("spectral model has no bins");
  if (noise.size() != signal.size() || response.size() != signal.size()) {
    throw std::invalid_argument("spectral model arrays differ in length");
  }
  for (std::size_t f = 0; f < signal.size(); ++f) {
    if (!std::isfinite(signal[f]) || !std::isfinite(noise[f]) || signal[f] < 0.0 || noise[f] < 0.0) {
      throw std::invalid_argument("bin " + std::to_string(f) + ": powers must be finite and nonnegative");
    }
    if (!std::isfinite(response[f].real()) || !std::isfinite(response[f].imag())) {
      throw std::invalid_argument("bin " + std::to_string(f) + ": response is not finite");
    }
  }
}

std::vector<double> influence_factors(const SpectralModel& m) {
  m.validate();
  std::vector<double> out(m.bins());
  for (std::size_t f = 0; f < m.bins(); ++f) {
    const double s = m.signal[f];
    const double n = m.noise[f];
    if (s == 0.0) {
      out[f] = n > 0.0 ? 0.0 : 1.0;
    } else {
      out[f] = 1.0 / (1.0 + std::norm(m.response[f]) * n / s);
    }
  }
  return out;
}

std::vector<Complex> adapt_filter(const SpectralModel& m) {
  const auto factors = influence_factors(m);
  std::vector<Complex> out(m.bins());
  for (std::size_t f = 0; f < m.bins(); ++f) out[f] = m.response[f] * factors[f];
  return out;
}

double expected_mse(const SpectralModel& m, const std::vector<Complex>& candidate) {
  m.validate();
  if (candidate.size() != m.bins()) throw std::invalid_argument("candidate response has wrong length");
  double acc = 0.0;
  for (std::size_t f = 0; f < m.bins(); ++f) {
    const Complex w = m.response[f];
    const Complex v = candidate[f];
    if (w == Complex{}) {
      if (m.signal[f] > 0.0) {
        throw std::domain_error("bin " + std::to_string(f) + ": W = 0 with nonzero signal power");
      }
    } else {
      acc += std::norm(1.0 - v / w) * m.signal[f];
    }
    acc += std::norm(v) * m.noise[f];
  }
  return acc;
}

double minimize_bin(double signal, double noise, double response, double tol) {
  if (response == 0.0) {
    if (signal > 0.0) throw std::domain_error("minimize_bin: W = 0 with nonzero signal power");
    return 0.0;
  }
  auto cost = [&](double v) {
    const double r = 1.0 - v / response;
    return r * r * signal + v * v * noise;
  };
  double lo = std::min(0.0, response);
  double hi = std::max(0.0, response);
  const double scale = hi - lo;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo + (1.0 - inv_phi) * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = cost(a);
  double fb = cost(b);
  while (hi - lo > 1e-6 * scale) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = lo + (1.0 - inv_phi) * (hi - lo);
      fa = cost(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = cost(b);
    }
  }
  // Golden section stalls near sqrt(eps) relative accuracy; bisect on the
  // slope sign to go further.
  lo = std::max(std::min(0.0, response), lo - 1e-6 * scale);
  hi = std::min(std::max(0.0, response), hi + 1e-6 * scale);
  const double h = 1e-4 * scale;
  auto slope = [&](double v) { return (cost(v + h) - cost(v - h)) / (2.0 * h); };
  if (slope(lo) >= 0.0) return lo;
  if (slope(hi) <= 0.0) return hi;
  while (hi - lo > tol * scale) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::size_t> uniform_partition(std::size_t bins, std::size_t bands) {
  if (bands == 0 || bands > bins) throw std::invalid_argument("band count must be in [1, bins]");
  std::vector<std::size_t> out(bins);
  for (std::size_t f = 0; f < bins; ++f) out[f] = f * bands / bins;
  return out;
}

SubbandReport subband_consistency(const SpectralModel& m, const std::vector<std::size_t>& band_of_bin) {
  m.validate();
  if (band_of_bin.size() != m.bins()) throw std::invalid_argument("partition does not cover every bin");
  const std::size_t bands = *std::max_element(band_of_bin.begin(), band_of_bin.end()) + 1;
  std::vector<std::size_t> members(bands, 0);
  std::vector<std::size_t> signal_members(bands, 0);
  SubbandReport r;
  r.band_of_bin = band_of_bin;
  r.k.assign(bands, 0.0);
  r.n.assign(bands, 0.0);
  for (std::size_t f = 0; f < m.bins(); ++f) {
    const std::size_t b = band_of_bin[f];
    ++members[b];
    r.n[b] += m.noise[f];
    if (m.signal[f] > 0.0) {
      ++signal_members[b];
      r.k[b] += std::norm(m.response[f]) / m.signal[f];
    }
  }
  r.factor.assign(bands, 0.0);
  for (std::size_t b = 0; b < bands; ++b) {
    if (members[b] == 0) throw std::invalid_argument("band " + std::to_string(b) + " is empty");
    r.n[b] /= static_cast<double>(members[b]);
    if (signal_members[b] > 0) r.k[b] /= static_cast<double>(signal_members[b]);
    r.factor[b] = 1.0 / (1.0 + r.k[b] * r.n[b]);
  }

  const auto exact = influence_factors(m);
  double sum = 0.0;
  for (std::size_t f = 0; f < m.bins(); ++f) {
    const double approx = r.factor[band_of_bin[f]];
    const double dev = exact[f] > 0.0 ? std::fabs(approx - exact[f]) / exact[f] : std::fabs(approx);
    r.max_rel_deviation = std::max(r.max_rel_deviation, dev);
    sum += dev;
  }
  r.mean_rel_deviation = sum / static_cast<double>(m.bins());
  return r;
}

SpectralModel random_spectrum(std::uint64_t seed, std::size_t bins) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> s(0.1, 10.0), n(0.0, 2.0), w(0.2, 1.5);
  SpectralModel m;
  for (std::size_t f = 0; f < bins; ++f) {
    m.signal.push_back(s(rng));
    m.noise.push_back(n(rng));
    m.response.emplace_back(w(rng), 0.0);
  }
  return m;
}

SpectralModel smooth_spectrum(std::uint64_t seed, std::size_t bins) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s0 = 5.0 + 5.0 * u(rng);
  const double decay = 1.0 + 3.0 * u(rng);
  const double n0 = 0.2 + 0.8 * u(rng);
  const double tilt = 2.0 * u(rng);
  const double cutoff = 0.3 + 0.7 * u(rng);
  SpectralModel m;
  for (std::size_t f = 0; f < bins; ++f) {
    const double x = (static_cast<double>(f) + 0.5) / static_cast<double>(bins);
    m.signal.push_back(s0 * std::exp(-decay * x) + 0.05);
    m.noise.push_back(n0 * (1.0 + tilt * x));
    m.response.emplace_back(1.0 / (1.0 + (x / cutoff) * (x / cutoff)), 0.0);
  }
  return m;
}

OptimalityReport check_optimality(std::uint64_t seed, std::size_t spectra, std::size_t bins,
                                  std::size_t perturbations) {
  OptimalityReport r;
  r.spectra = spectra;
  r.worst_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> delta(-0.1, 0.1);
  for (std::size_t i = 0; i < spectra; ++i) {
    const SpectralModel m = random_spectrum(rng(), bins);
    const auto adapted = adapt_filter(m);
    const double best = expected_mse(m, adapted);
    for (std::size_t f = 0; f < bins; ++f) {
      const double v = minimize_bin(m.signal[f], m.noise[f], m.response[f].real());
      r.max_numeric_gap = std::max(r.max_numeric_gap, std::abs(adapted[f] - Complex(v, 0.0)));
    }
    for (std::size_t p = 0; p < perturbations; ++p) {
      std::vector<Complex> candidate(adapted);
      for (auto& c : candidate) c *= 1.0 + delta(rng);
      const double margin = expected_mse(m, candidate) - best;
      r.worst_margin = std::min(r.worst_margin, margin);
      if (margin < 0.0) ++r.violations;
      ++r.perturbations;
    }
  }
  return r;
}

std::vector<double> refinement_sweep(const SpectralModel& m, const std::vector<std::size_t>& band_counts) {
  std::vector<double> out;
  for (std::size_t bands : band_counts) {
    out.push_back(subband_consistency(m, uniform_partition(m.bins(), bands)).max_rel_deviation);
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(Complex v) {
  if (v.imag() == 0.0) return num(v.real());
  return num(v.real()) + (v.imag() < 0.0 ? "" : "+") + num(v.imag()) + "i";
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const SpectralModel& m) {
  const auto factors = influence_factors(m);
  const auto adapted = adapt_filter(m);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bin,S,N,W,W_prime,factor\n";
  for (std::size_t f = 0; f < m.bins(); ++f) {
    out << f << ',' << num(m.signal[f]) << ',' << num(m.noise[f]) << ',' << num(m.response[f]) << ','
        << num(adapted[f]) << ',' << num(factors[f]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qpf::wiener
