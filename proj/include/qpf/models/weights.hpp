#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qpf/engine/conv.hpp"
#include "qpf/models/graph.hpp"

namespace qpf::models {

// Trainable state of a model: one ConvParams per conv, plus one theta array
// per conv in qp_adaptive mode (empty otherwise).
template <typename T>
struct ModelWeights {
  std::vector<engine::ConvParams<T>> convs;
  std::vector<std::vector<T>> thetas;

  template <typename U>
  ModelWeights<U> cast() const {
    ModelWeights<U> out;
    for (const auto& c : convs) {
      engine::ConvParams<U> p(c.geom);
      p.weights = c.weights.template cast<U>();
      p.bias.assign(c.bias.begin(), c.bias.end());
      out.convs.push_back(std::move(p));
    }
    for (const auto& t : thetas) out.thetas.emplace_back(t.begin(), t.end());
    return out;
  }

  bool operator==(const ModelWeights& other) const {
    if (convs.size() != other.convs.size() || thetas != other.thetas) return false;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      if (!(convs[i].geom == other.convs[i].geom) || !(convs[i].weights == other.convs[i].weights) ||
          convs[i].bias != other.convs[i].bias) {
        return false;
      }
    }
    return true;
  }
};

// All-zero weights (and theta) shaped for `spec`.
template <typename T>
ModelWeights<T> zero_weights(const ModelSpec& spec);

// He-normal conv weights (output conv scaled by 0.1), zero biases, theta = 0.
// Drawn in double from one seeded stream, so float and double inits agree.
template <typename T>
ModelWeights<T> init_weights(const ModelSpec& spec, std::uint64_t seed);

// Throws ShapeError if `weights` does not fit `spec`.
template <typename T>
void validate_weights(const ModelSpec& spec, const ModelWeights<T>& weights);

// Flat views in a fixed order: conv weights, conv bias (when present) per
// conv, then every theta array.
template <typename T>
std::vector<std::span<T>> parameter_spans(ModelWeights<T>& weights);
template <typename T>
std::vector<std::span<const T>> parameter_spans(const ModelWeights<T>& weights);

template <typename T>
void clamp_all_theta(ModelWeights<T>& weights);

struct LayerParams {
  std::string name;
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::size_t thetas = 0;
  std::size_t total() const { return weights + biases + thetas; }
};

struct ParamReport {
  std::string model;
  Mode mode = Mode::Vanilla;
  bool approximate = false;
  std::vector<LayerParams> layers;
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::size_t thetas = 0;
  std::size_t total() const { return weights + biases + thetas; }
};

// Exact trainable-parameter count, per layer and per family.
ParamReport count_params(const ModelSpec& spec);

}  // namespace qpf::models
