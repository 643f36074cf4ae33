#include "qpf/engine/conv.hpp"

#include <algorithm>
#include <cstring>

#include "qpf/engine/gemm.hpp"

namespace qpf::engine {
namespace {

bool supported_kernel(std::size_t k) { return k == 1 || k == 3 || k == 5; }

// Rows k = (ci, ky, kx) of the padded input patch, one column per output pixel.
template <typename T>
void im2col(const T* in, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh,
            std::size_t kw, T* col) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  const std::size_t plane = h * w;
  T* row = col;
  for (std::size_t ci = 0; ci < channels; ++ci) {
    const T* src = in + ci * plane;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx, row += plane) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          T* dst = row + y * W;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H || x1 <= x0) {
            std::fill(dst, dst + W, T{});
            continue;
          }
          std::fill(dst, dst + x0, T{});
          std::memcpy(dst + x0, src + sy * W + x0 + dx, static_cast<std::size_t>(x1 - x0) * sizeof(T));
          std::fill(dst + x1, dst + W, T{});
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the input planes.
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh,
            std::size_t kw, T* in) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  const std::size_t plane = h * w;
  const T* row = col;
  for (std::size_t ci = 0; ci < channels; ++ci) {
    T* dst = in + ci * plane;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx, row += plane) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const T* src = row + y * W;
          T* d = dst + sy * W + dx;
          for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += src[x];
        }
      }
    }
  }
}

// Layers with few outputs per group skip im2col: each output plane is
// accumulated tap by tap in the same (ci, ky, kx) order the GEMM uses.
constexpr std::size_t kDirectMaxOutputs = 4;

struct Tap {
  std::ptrdiff_t dy, dx, x0, x1;
};

inline Tap make_tap(std::size_t ky, std::size_t kx, std::size_t kh, std::size_t kw, std::ptrdiff_t W) {
  const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(kw / 2);
  return Tap{dy, dx, std::max<std::ptrdiff_t>(0, -dx), std::min<std::ptrdiff_t>(W, W - dx)};
}

template <typename T>
void direct_forward(const T* in, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh,
                    std::size_t kw, const T* weights, T* out) {
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ci = 0; ci < channels; ++ci) {
    const T* src = in + ci * h * w;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const T wv = *weights++;
        const Tap t = make_tap(ky, kx, kh, kw, W);
        for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -t.dy); y < std::min(H, H - t.dy); ++y) {
          T* d = out + y * W;
          const T* s = src + (y + t.dy) * W + t.dx;
          for (std::ptrdiff_t x = t.x0; x < t.x1; ++x) d[x] += wv * s[x];
        }
      }
    }
  }
}

template <typename T>
void direct_backward(const T* in, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh,
                     std::size_t kw, const T* weights, const T* go, T* grad_weights, T* grad_in) {
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ci = 0; ci < channels; ++ci) {
    const T* src = in + ci * h * w;
    T* gi = grad_in + ci * h * w;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const T wv = *weights++;
        const Tap t = make_tap(ky, kx, kh, kw, W);
        T acc{};
        for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -t.dy); y < std::min(H, H - t.dy); ++y) {
          const T* g = go + y * W;
          const T* s = src + (y + t.dy) * W + t.dx;
          T* d = gi + (y + t.dy) * W + t.dx;
          for (std::ptrdiff_t x = t.x0; x < t.x1; ++x) {
            acc += g[x] * s[x];
            d[x] += wv * g[x];
          }
        }
        *grad_weights++ += acc;
      }
    }
  }
}

template <typename T>
void check_input(const Tensor<T>& input, const ConvParams<T>& params, std::string_view layer) {
  params.geom.validate(layer);
  if (input.shape().c != params.geom.in) {
    throw ShapeError(std::string(layer) + ": input has " + std::to_string(input.shape().c) +
                     " channels, layer expects " + std::to_string(params.geom.in));
  }
  const Shape wshape{params.geom.out, params.geom.in_per_group(), params.geom.kh, params.geom.kw};
  if (!(params.weights.shape() == wshape) || params.bias.size() != params.geom.bias_count()) {
    throw ShapeError(std::string(layer) + ": parameter arrays do not match layer geometry");
  }
}

}  // namespace

void ConvGeometry::validate(std::string_view layer) const {
  const std::string name(layer);
  if (!supported_kernel(kh) || !supported_kernel(kw)) {
    throw ShapeError(name + ": kernel must be 1, 3 or 5 in each dimension, got " +
                     std::to_string(kh) + "x" + std::to_string(kw));
  }
  if (in == 0 || out == 0 || groups == 0 || in % groups != 0 || out % groups != 0) {
    throw ShapeError(name + ": channels " + std::to_string(in) + "->" + std::to_string(out) +
                     " not divisible into " + std::to_string(groups) + " groups");
  }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params, std::string_view layer) {
  check_input(input, params, layer);
  const auto& g = params.geom;
  const Shape is = input.shape();
  const std::size_t plane = is.plane();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const std::size_t k = cig * g.kh * g.kw;

  const bool direct = cog <= kDirectMaxOutputs;

  Tensor<T> out(Shape{is.n, g.out, is.h, is.w});
  std::vector<T> col(direct ? 0 : k * plane);
  for (std::size_t n = 0; n < is.n; ++n) {
    for (std::size_t co = 0; co < g.out; ++co) {
      std::fill_n(out.plane(n, co), plane, g.has_bias ? params.bias[co] : T{});
    }
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      const T* w = params.weights.data().data() + grp * cog * k;
      if (direct) {
        for (std::size_t co = 0; co < cog; ++co) {
          direct_forward(input.plane(n, grp * cig), cig, is.h, is.w, g.kh, g.kw, w + co * k,
                         out.plane(n, grp * cog + co));
        }
        continue;
      }
      im2col(input.plane(n, grp * cig), cig, is.h, is.w, g.kh, g.kw, col.data());
      gemm_accumulate(cog, plane, k, w, k, col.data(), plane, out.plane(n, grp * cog), plane);
    }
  }
  require_finite(out, layer);
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& grad_out, std::string_view layer) {
  check_input(input, params, layer);
  const auto& g = params.geom;
  const Shape is = input.shape();
  const Shape os{is.n, g.out, is.h, is.w};
  if (!(grad_out.shape() == os)) {
    throw ShapeError(std::string(layer) + ": grad_out shape " + grad_out.shape().str() +
                     " does not match output shape " + os.str());
  }
  const std::size_t plane = is.plane();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const std::size_t k = cig * g.kh * g.kw;

  ConvGrads<T> grads{Tensor<T>(is), Tensor<T>(params.weights.shape()),
                     std::vector<T>(g.bias_count(), T{})};

  if (cog <= kDirectMaxOutputs) {
    for (std::size_t n = 0; n < is.n; ++n) {
      for (std::size_t co = 0; co < g.out; ++co) {
        const std::size_t grp = co / cog;
        const std::size_t off = co * k;
        direct_backward(input.plane(n, grp * cig), cig, is.h, is.w, g.kh, g.kw,
                        params.weights.data().data() + off, grad_out.plane(n, co),
                        grads.weights.data().data() + off, grads.input.plane(n, grp * cig));
      }
    }
  } else {
    // Transposed weights give grad_col = W^T * grad_out; the weight gradient
    // is accumulated transposed as col * grad_out^T.
    std::vector<T> wt(g.groups * k * cog);
    std::vector<T> gwt(g.groups * k * cog);
    std::vector<T> col(k * plane);
    std::vector<T> go_t(plane * cog);
    std::vector<T> grad_col(k * plane);
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      transpose(cog, k, params.weights.data().data() + grp * cog * k, wt.data() + grp * k * cog);
    }
    for (std::size_t n = 0; n < is.n; ++n) {
      for (std::size_t grp = 0; grp < g.groups; ++grp) {
        const T* go = grad_out.plane(n, grp * cog);
        im2col(input.plane(n, grp * cig), cig, is.h, is.w, g.kh, g.kw, col.data());
        transpose(cog, plane, go, go_t.data());
        gemm_accumulate(k, cog, plane, col.data(), plane, go_t.data(), cog, gwt.data() + grp * k * cog, cog);

        std::fill(grad_col.begin(), grad_col.end(), T{});
        gemm_accumulate(k, plane, cog, wt.data() + grp * k * cog, cog, go, plane, grad_col.data(), plane);
        col2im(grad_col.data(), cig, is.h, is.w, g.kh, g.kw, grads.input.plane(n, grp * cig));
      }
    }
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      transpose(k, cog, gwt.data() + grp * k * cog, grads.weights.data().data() + grp * cog * k);
    }
  }

  if (g.has_bias) {
    for (std::size_t n = 0; n < is.n; ++n) {
      for (std::size_t co = 0; co < g.out; ++co) {
        const T* go = grad_out.plane(n, co);
        T acc = grads.bias[co];
        for (std::size_t p = 0; p < plane; ++p) acc += go[p];
        grads.bias[co] = acc;
      }
    }
  }
  require_finite(grads.input, layer);
  require_finite(grads.weights, layer);
  require_finite(std::span<const T>(grads.bias), layer);
  return grads;
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const ConvParams<float>&, std::string_view);
template Tensor<double> conv2d_forward(const Tensor<double>&, const ConvParams<double>&, std::string_view);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const ConvParams<float>&,
                                          const Tensor<float>&, std::string_view);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const ConvParams<double>&,
                                           const Tensor<double>&, std::string_view);

}  // namespace qpf::engine
