#include "qpf/codec/synthetic.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <stdexcept>
#include <type_traits>

namespace qpf::codec {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};

}  // namespace

Plane synthetic_image(std::uint64_t seed, std::size_t width, std::size_t height) {
  if (width < 2 || height < 2) throw std::invalid_argument("synthetic_image: size must be at least 2x2");
  const int w = static_cast<int>(width);
  const int h = static_cast<int>(height);
  const std::size_t half = width / 2 + 1;

  std::unique_ptr<double, FftwFree> field(fftw_alloc_real(width * height));
  std::unique_ptr<fftw_complex, FftwFree> spectrum(fftw_alloc_complex(height * half));
  // FFTW_ESTIMATE plans are chosen without timing, so output is reproducible.
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy> r2c(
      fftw_plan_dft_r2c_2d(h, w, field.get(), spectrum.get(), FFTW_ESTIMATE));
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy> c2r(
      fftw_plan_dft_c2r_2d(h, w, spectrum.get(), field.get(), FFTW_ESTIMATE));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < width * height; ++i) field.get()[i] = normal(rng);
  fftw_execute(r2c.get());

  // Shape white noise to a 1/f amplitude spectrum; DC is dropped and the
  // mean restored below.
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y <= height / 2 ? y : height - y) / static_cast<double>(height);
    for (std::size_t x = 0; x < half; ++x) {
      const double fx = static_cast<double>(x) / static_cast<double>(width);
      const double f = std::hypot(fx, fy);
      const double gain = f > 0.0 ? 1.0 / f : 0.0;
      auto& c = spectrum.get()[y * half + x];
      c[0] *= gain;
      c[1] *= gain;
    }
  }
  fftw_execute(c2r.get());

  const double n = static_cast<double>(width * height);
  double mean = 0.0;
  for (std::size_t i = 0; i < width * height; ++i) mean += field.get()[i];
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < width * height; ++i) var += (field.get()[i] - mean) * (field.get()[i] - mean);
  const double stddev = std::sqrt(var / n);

  Plane out(width, height);
  for (std::size_t i = 0; i < width * height; ++i) {
    const double z = stddev > 0.0 ? (field.get()[i] - mean) / stddev : 0.0;
    out.pixels[i] = to_byte(128.0 + 48.0 * z);
  }
  return out;
}

}  // namespace qpf::codec
