#include "qpf/engine/loss.hpp"

#include <cmath>

namespace qpf::engine {

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  if (pred.empty()) throw ShapeError("mse_loss: empty tensors");
  LossResult<T> result{0.0, Tensor<T>(pred.shape())};
  const auto p = pred.data();
  const auto t = target.data();
  auto g = result.grad.data();
  const double count = static_cast<double>(p.size());
  const T scale = static_cast<T>(2.0 / count);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T d = p[i] - t[i];
    sum += static_cast<double>(d) * static_cast<double>(d);
    g[i] = scale * d;
  }
  result.value = sum / count;
  if (!std::isfinite(result.value)) throw NonFiniteError("mse_loss: non-finite loss");
  require_finite(result.grad, "mse_loss");
  return result;
}

template LossResult<float> mse_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> mse_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace qpf::engine
