#include "qpf/models/weights.hpp"

#include <cmath>
#include <random>

#include "qpf/modulation/modulation.hpp"

namespace qpf::models {

template <typename T>
ModelWeights<T> zero_weights(const ModelSpec& spec) {
  ModelWeights<T> w;
  for (const auto& g : spec.convs) w.convs.emplace_back(g);
  if (spec.mode == Mode::QpAdaptive) {
    for (const auto& g : spec.convs) w.thetas.emplace_back(g.out, T{});
  }
  return w;
}

template <typename T>
ModelWeights<T> init_weights(const ModelSpec& spec, std::uint64_t seed) {
  ModelWeights<T> w = zero_weights<T>(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < w.convs.size(); ++i) {
    auto& c = w.convs[i];
    const double fan_in = static_cast<double>(c.geom.in_per_group() * c.geom.kh * c.geom.kw);
    double stddev = std::sqrt(2.0 / fan_in);
    if (i + 1 == w.convs.size()) stddev *= 0.1;
    for (T& v : c.weights.data()) v = static_cast<T>(stddev * normal(rng));
  }
  return w;
}

template <typename T>
void validate_weights(const ModelSpec& spec, const ModelWeights<T>& weights) {
  if (weights.convs.size() != spec.convs.size()) {
    throw ShapeError(spec.name + ": expected " + std::to_string(spec.convs.size()) +
                     " conv layers, weights have " + std::to_string(weights.convs.size()));
  }
  for (std::size_t i = 0; i < spec.convs.size(); ++i) {
    const auto& g = spec.convs[i];
    const auto& c = weights.convs[i];
    const engine::Shape ws{g.out, g.in_per_group(), g.kh, g.kw};
    if (!(c.geom == g) || !(c.weights.shape() == ws) || c.bias.size() != g.bias_count()) {
      throw ShapeError(spec.name + ": weights of " + spec.conv_names[i] + " do not match geometry");
    }
  }
  const std::size_t expected_thetas = spec.mode == Mode::QpAdaptive ? spec.convs.size() : 0;
  if (weights.thetas.size() != expected_thetas) {
    throw ShapeError(spec.name + ": expected " + std::to_string(expected_thetas) + " theta arrays");
  }
  for (std::size_t i = 0; i < weights.thetas.size(); ++i) {
    if (weights.thetas[i].size() != spec.convs[i].out) {
      throw ShapeError(spec.name + ": theta of " + spec.conv_names[i] + " has wrong length");
    }
  }
}

template <typename T>
std::vector<std::span<T>> parameter_spans(ModelWeights<T>& weights) {
  std::vector<std::span<T>> out;
  for (auto& c : weights.convs) {
    out.push_back(c.weights.data());
    if (!c.bias.empty()) out.push_back(c.bias);
  }
  for (auto& t : weights.thetas) out.push_back(t);
  return out;
}

template <typename T>
std::vector<std::span<const T>> parameter_spans(const ModelWeights<T>& weights) {
  std::vector<std::span<const T>> out;
  for (const auto& c : weights.convs) {
    out.push_back(c.weights.data());
    if (!c.bias.empty()) out.push_back(c.bias);
  }
  for (const auto& t : weights.thetas) out.push_back(t);
  return out;
}

template <typename T>
void clamp_all_theta(ModelWeights<T>& weights) {
  for (auto& t : weights.thetas) modulation::clamp_theta(std::span<T>(t));
}

ParamReport count_params(const ModelSpec& spec) {
  ParamReport r;
  r.model = spec.name;
  r.mode = spec.mode;
  r.approximate = spec.approximate;
  for (std::size_t i = 0; i < spec.convs.size(); ++i) {
    const auto& g = spec.convs[i];
    LayerParams l{spec.conv_names[i], g.weight_count(), g.bias_count(),
                  spec.mode == Mode::QpAdaptive ? g.out : 0};
    r.weights += l.weights;
    r.biases += l.biases;
    r.thetas += l.thetas;
    r.layers.push_back(std::move(l));
  }
  return r;
}

#define QPF_INSTANTIATE(T)                                                           \
  template ModelWeights<T> zero_weights<T>(const ModelSpec&);                        \
  template ModelWeights<T> init_weights<T>(const ModelSpec&, std::uint64_t);         \
  template void validate_weights<T>(const ModelSpec&, const ModelWeights<T>&);       \
  template std::vector<std::span<T>> parameter_spans<T>(ModelWeights<T>&);           \
  template std::vector<std::span<const T>> parameter_spans<T>(const ModelWeights<T>&); \
  template void clamp_all_theta<T>(ModelWeights<T>&);

QPF_INSTANTIATE(float)
QPF_INSTANTIATE(double)
#undef QPF_INSTANTIATE

}  // namespace qpf::models
