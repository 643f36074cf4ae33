#include "qpf/engine/combinators.hpp"

#include <algorithm>

namespace qpf::engine {

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat: spatial/batch mismatch " + sa.str() + " vs " + sb.str());
  }
  Tensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = sa.plane();
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), sa.c * plane, out.plane(n, 0));
    std::copy_n(b.plane(n, 0), sb.c * plane, out.plane(n, sa.c));
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, std::size_t first_channels) {
  const Shape s = t.shape();
  if (first_channels > s.c) {
    throw ShapeError("split: " + std::to_string(first_channels) + " channels requested from " + s.str());
  }
  const std::size_t rest = s.c - first_channels;
  Tensor<T> a(Shape{s.n, first_channels, s.h, s.w});
  Tensor<T> b(Shape{s.n, rest, s.h, s.w});
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    std::copy_n(t.plane(n, 0), first_channels * plane, a.plane(n, 0));
    std::copy_n(t.plane(n, first_channels), rest * plane, b.plane(n, 0));
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
Tensor<T> residual_add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "residual_add");
  Tensor<T> out = a;
  accumulate(out, b);
  require_finite(out, "residual_add");
  return out;
}

template Tensor<float> concat_channels(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> concat_channels(const Tensor<double>&, const Tensor<double>&);
template std::pair<Tensor<float>, Tensor<float>> split_channels(const Tensor<float>&, std::size_t);
template std::pair<Tensor<double>, Tensor<double>> split_channels(const Tensor<double>&, std::size_t);
template Tensor<float> residual_add(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> residual_add(const Tensor<double>&, const Tensor<double>&);

}  // namespace qpf::engine
