#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qpf::engine {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates for one parameter array.
template <typename T>
struct AdamMoments {
  std::vector<T> m;
  std::vector<T> v;
};

// One bias-corrected Adam update of `params` in place. `step` is 1-based.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamMoments<T>& moments,
               const AdamConfig& cfg, std::uint64_t step);

// Adam over a fixed list of parameter arrays. The list layout is bound on the
// first call to step() and must not change afterwards.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<AdamMoments<T>>& moments() const { return moments_; }

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<AdamMoments<T>> moments_;
};

}  // namespace qpf::engine
