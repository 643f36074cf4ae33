#pragma once

#include <optional>
#include <vector>

#include "qpf/engine/tensor.hpp"
#include "qpf/models/graph.hpp"
#include "qpf/models/weights.hpp"
#include "qpf/modulation/modulation.hpp"

namespace qpf::models {

// Every node's output from one forward pass, indexed like ModelSpec::nodes.
template <typename T>
struct Tape {
  std::vector<engine::Tensor<T>> values;
};

// Runs the model on an (n, 1, h, w) input. `ctx` is required in qp_adaptive
// and qp_map modes and ignored in vanilla mode. When `tape` is given it
// receives every intermediate value (needed for backward); otherwise
// intermediates are released as soon as they are consumed.
template <typename T>
engine::Tensor<T> forward(const ModelSpec& spec, const ModelWeights<T>& weights,
                          const engine::Tensor<T>& input,
                          const std::optional<modulation::QpContext>& ctx, Tape<T>* tape = nullptr);

template <typename T>
struct ModelGrads {
  engine::Tensor<T> input;
  ModelWeights<T> params;  // same layout as the weights
};

// Gradients of a scalar loss given dL/d(output) and the tape of the forward pass.
template <typename T>
ModelGrads<T> backward(const ModelSpec& spec, const ModelWeights<T>& weights, const Tape<T>& tape,
                       const engine::Tensor<T>& grad_out,
                       const std::optional<modulation::QpContext>& ctx);

}  // namespace qpf::models
