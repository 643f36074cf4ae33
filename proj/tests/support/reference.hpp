#pragma once

// Straightforward reference implementations used as test oracles. They share
// nothing with the library code beyond the tensor container.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "qpf/engine/conv.hpp"
#include "qpf/engine/tensor.hpp"

namespace qpf::testing {

template <typename T>
engine::Tensor<T> random_tensor(engine::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  engine::Tensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
engine::ConvParams<T> random_conv(const engine::ConvGeometry& g, std::uint64_t seed) {
  engine::ConvParams<T> p(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto& v : p.weights.data()) v = static_cast<T>(dist(rng));
  for (auto& v : p.bias) v = static_cast<T>(dist(rng));
  return p;
}

// Nested loops over (n, co, y, x); each output starts at the bias and adds
// (ci, ky, kx) terms in row-major order. Padded taps contribute w * 0.
template <typename T>
engine::Tensor<T> naive_conv(const engine::Tensor<T>& in, const engine::ConvParams<T>& p) {
  const auto& g = p.geom;
  const auto s = in.shape();
  const std::size_t cig = g.in_per_group(), cog = g.out_per_group();
  const auto ph = static_cast<std::ptrdiff_t>(g.kh / 2), pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  engine::Tensor<T> out(engine::Shape{s.n, g.out, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t co = 0; co < g.out; ++co) {
      const std::size_t grp = co / cog;
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) {
          T acc = g.has_bias ? p.bias[co] : T{};
          for (std::size_t ci = 0; ci < cig; ++ci) {
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
              for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto yy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                const auto xx = static_cast<std::ptrdiff_t>(x + kx) - pw;
                T v{};
                if (yy >= 0 && xx >= 0 && yy < static_cast<std::ptrdiff_t>(s.h) &&
                    xx < static_cast<std::ptrdiff_t>(s.w)) {
                  v = in[((n * s.c + grp * cig + ci) * s.h + static_cast<std::size_t>(yy)) * s.w +
                         static_cast<std::size_t>(xx)];
                }
                acc += p.weights[((co * cig + ci) * g.kh + ky) * g.kw + kx] * v;
              }
            }
          }
          out[((n * g.out + co) * s.h + y) * s.w + x] = acc;
        }
      }
    }
  }
  return out;
}

// Adjoint of naive_conv with respect to input and weights, in long double.
struct NaiveConvGrads {
  std::vector<long double> input;
  std::vector<long double> weights;
  std::vector<long double> bias;
};

template <typename T>
NaiveConvGrads naive_conv_backward(const engine::Tensor<T>& in, const engine::ConvParams<T>& p,
                                   const engine::Tensor<T>& go) {
  const auto& g = p.geom;
  const auto s = in.shape();
  const std::size_t cig = g.in_per_group(), cog = g.out_per_group();
  const auto ph = static_cast<std::ptrdiff_t>(g.kh / 2), pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  NaiveConvGrads r;
  r.input.assign(in.size(), 0.0L);
  r.weights.assign(p.weights.size(), 0.0L);
  r.bias.assign(g.bias_count(), 0.0L);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t co = 0; co < g.out; ++co) {
      const std::size_t grp = co / cog;
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) {
          const long double gv = go[((n * g.out + co) * s.h + y) * s.w + x];
          if (g.has_bias) r.bias[co] += gv;
          for (std::size_t ci = 0; ci < cig; ++ci) {
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
              for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto yy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                const auto xx = static_cast<std::ptrdiff_t>(x + kx) - pw;
                if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(s.h) ||
                    xx >= static_cast<std::ptrdiff_t>(s.w)) {
                  continue;
                }
                const std::size_t ii = ((n * s.c + grp * cig + ci) * s.h + static_cast<std::size_t>(yy)) * s.w +
                                       static_cast<std::size_t>(xx);
                const std::size_t wi = ((co * cig + ci) * g.kh + ky) * g.kw + kx;
                r.weights[wi] += gv * static_cast<long double>(in[ii]);
                r.input[ii] += gv * static_cast<long double>(p.weights[wi]);
              }
            }
          }
        }
      }
    }
  }
  return r;
}

// Largest |a - b| / max(|b|, floor) over two equally long sequences.
template <typename A, typename B>
double max_rel_diff(const A& a, const B& b, double floor = 1e-12) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ref = static_cast<double>(b[i]);
    const double d = std::abs(static_cast<double>(a[i]) - ref) / std::max(std::abs(ref), floor);
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace qpf::testing
