#include "qpf/metrics/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qpf/errors.hpp"

namespace qpf::metrics {

double psnr_from_mse(double mse, double peak) {
  if (!(mse >= 0.0)) throw std::invalid_argument("psnr: mse must be nonnegative");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

template <typename T>
double psnr_impl(std::span<const T> reference, std::span<const T> test, double peak) {
  if (reference.size() != test.size()) {
    throw ShapeError("psnr: " + std::to_string(reference.size()) + " vs " + std::to_string(test.size()) + " samples");
  }
  if (reference.empty()) throw ShapeError("psnr: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = static_cast<double>(reference[i]) - static_cast<double>(test[i]);
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(reference.size()), peak);
}

// Cubic least-squares fit y = p(x), with x centered and scaled for
// conditioning. Fewer than 4 distinct points are rejected by the callers.
struct Cubic {
  double center = 0.0;
  double scale = 1.0;
  Eigen::Vector4d c = Eigen::Vector4d::Zero();

  // Integral of p over [a, b] in the original variable.
  double integral(double a, double b) const {
    auto prim = [&](double x) {
      const double t = (x - center) / scale;
      return scale * t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)));
    };
    return prim(b) - prim(a);
  }
};

Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  Cubic f;
  f.center = 0.5 * (*lo + *hi);
  f.scale = *hi > *lo ? 0.5 * (*hi - *lo) : 1.0;
  Eigen::MatrixXd a(x.size(), 4);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - f.center) / f.scale;
    a.row(static_cast<Eigen::Index>(i)) << 1.0, t, t * t, t * t * t;
    b[static_cast<Eigen::Index>(i)] = y[i];
  }
  f.c = a.colPivHouseholderQr().solve(b);
  return f;
}

void check_curve(const std::vector<RdPoint>& pts, const char* which) {
  if (pts.size() < 4) throw std::invalid_argument(std::string(which) + " curve needs at least 4 points");
  for (const auto& p : pts) {
    if (!(p.rate > 0.0) || !std::isfinite(p.rate) || !std::isfinite(p.psnr)) {
      throw std::invalid_argument(std::string(which) + " curve has a non-positive or non-finite point");
    }
  }
}

// Sorted by the abscissa; warns when the ordinate is not increasing.
void prepare(std::vector<RdPoint>& pts, const char* which, bool by_psnr, std::vector<std::string>& warnings) {
  check_curve(pts, which);
  std::sort(pts.begin(), pts.end(), [&](const RdPoint& a, const RdPoint& b) {
    return by_psnr ? a.psnr < b.psnr : a.rate < b.rate;
  });
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const bool ok = by_psnr ? pts[i].rate > pts[i - 1].rate : pts[i].psnr > pts[i - 1].psnr;
    if (!ok) {
      warnings.push_back(std::string(which) + " curve is not monotone; using sorted points");
      break;
    }
  }
}

}  // namespace

double psnr(std::span<const double> reference, std::span<const double> test, double peak) {
  return psnr_impl(reference, test, peak);
}

double psnr(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> test, double peak) {
  return psnr_impl(reference, test, peak);
}

BdResult bd_rate_detailed(std::vector<RdPoint> anchor, std::vector<RdPoint> test) {
  BdResult r;
  prepare(anchor, "anchor", true, r.warnings);
  prepare(test, "test", true, r.warnings);
  r.low = std::max(anchor.front().psnr, test.front().psnr);
  r.high = std::min(anchor.back().psnr, test.back().psnr);
  if (!(r.high > r.low)) throw std::invalid_argument("bd_rate: PSNR ranges do not overlap");

  auto fit = [](const std::vector<RdPoint>& pts) {
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(p.psnr);
      y.push_back(std::log10(p.rate));
    }
    return fit_cubic(x, y);
  };
  const Cubic fa = fit(anchor);
  const Cubic ft = fit(test);
  const double avg = (ft.integral(r.low, r.high) - fa.integral(r.low, r.high)) / (r.high - r.low);
  r.value = 100.0 * (std::pow(10.0, avg) - 1.0);
  return r;
}

double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test) {
  return bd_rate_detailed(anchor, test).value;
}

double bd_psnr(const std::vector<RdPoint>& anchor_in, const std::vector<RdPoint>& test_in) {
  std::vector<std::string> warnings;
  std::vector<RdPoint> anchor(anchor_in), test(test_in);
  prepare(anchor, "anchor", false, warnings);
  prepare(test, "test", false, warnings);
  const double low = std::max(std::log10(anchor.front().rate), std::log10(test.front().rate));
  const double high = std::min(std::log10(anchor.back().rate), std::log10(test.back().rate));
  if (!(high > low)) throw std::invalid_argument("bd_psnr: rate ranges do not overlap");
  auto fit = [](const std::vector<RdPoint>& pts) {
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(std::log10(p.rate));
      y.push_back(p.psnr);
    }
    return fit_cubic(x, y);
  };
  return (fit(test).integral(low, high) - fit(anchor).integral(low, high)) / (high - low);
}

std::vector<int> SweepCurve::qps() const {
  std::vector<int> out;
  for (const auto& p : points) out.push_back(p.qp);
  return out;
}

double SweepCurve::mean_gain() const {
  if (points.empty()) throw std::invalid_argument("mean_gain: empty curve");
  double acc = 0.0;
  for (const auto& p : points) acc += p.gain_db();
  return acc / static_cast<double>(points.size());
}

std::vector<RdPoint> SweepCurve::anchor_rd() const {
  std::vector<RdPoint> out;
  for (const auto& p : points) out.push_back({p.rate_bits, p.psnr_anchor});
  return out;
}

std::vector<RdPoint> SweepCurve::filtered_rd() const {
  std::vector<RdPoint> out;
  for (const auto& p : points) out.push_back({p.rate_bits, p.psnr_filtered});
  return out;
}

namespace {

constexpr const char* kSweepHeader = "model,mode,qp,psnr_anchor,psnr_filtered,gain_db,rate_bits";

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse(const std::string& s, const std::string& line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("sweep csv: bad value '" + s + "' in row '" + line + "'");
  }
  return v;
}

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCurve>& curves) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kSweepHeader << '\n';
  for (const auto& c : curves) {
    if (c.model.find(',') != std::string::npos || c.mode.find(',') != std::string::npos) {
      throw std::invalid_argument("model and mode names must not contain commas");
    }
    for (const auto& p : c.points) {
      out << c.model << ',' << c.mode << ',' << p.qp << ',' << num(p.psnr_anchor) << ',' << num(p.psnr_filtered)
          << ',' << num(p.gain_db()) << ',' << num(p.rate_bits) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SweepCurve> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) throw FormatError(path.string() + ": bad sweep header");
  std::vector<SweepCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 7) throw FormatError(path.string() + ": bad row '" + line + "'");
    SweepPoint p;
    p.qp = parse<int>(f[2], line);
    p.psnr_anchor = parse<double>(f[3], line);
    p.psnr_filtered = parse<double>(f[4], line);
    p.rate_bits = parse<double>(f[6], line);
    auto it = std::find_if(curves.begin(), curves.end(),
                           [&](const SweepCurve& c) { return c.model == f[0] && c.mode == f[1]; });
    if (it == curves.end()) {
      curves.push_back(SweepCurve{f[0], f[1], {}});
      it = std::prev(curves.end());
    }
    it->points.push_back(p);
  }
  return curves;
}

}  // namespace qpf::metrics
