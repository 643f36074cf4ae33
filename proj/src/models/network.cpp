#include "qpf/models/network.hpp"

#include <stdexcept>

#include "qpf/engine/activation.hpp"
#include "qpf/engine/combinators.hpp"
#include "qpf/engine/conv.hpp"

namespace qpf::models {
namespace {

void require_context(const ModelSpec& spec, const std::optional<modulation::QpContext>& ctx) {
  if (spec.mode != Mode::Vanilla && !ctx) {
    throw std::invalid_argument(spec.name + ": QP context required in " + to_string(spec.mode) + " mode");
  }
}

// Index of the last node consuming each node's output.
std::vector<std::size_t> last_uses(const ModelSpec& spec) {
  std::vector<std::size_t> last(spec.nodes.size(), 0);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    for (std::size_t in : spec.nodes[i].inputs) last[in] = i;
  }
  return last;
}

}  // namespace

template <typename T>
engine::Tensor<T> forward(const ModelSpec& spec, const ModelWeights<T>& weights,
                          const engine::Tensor<T>& input,
                          const std::optional<modulation::QpContext>& ctx, Tape<T>* tape) {
  validate_weights(spec, weights);
  require_context(spec, ctx);
  const engine::Shape s = input.shape();
  if (s.c != 1 || s.count() == 0) {
    throw ShapeError(spec.name + ": input must be a non-empty (n,1,h,w) tensor, got " + s.str());
  }

  std::vector<engine::Tensor<T>> values(spec.nodes.size());
  const std::vector<std::size_t> last = last_uses(spec);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const Node& node = spec.nodes[i];
    auto in = [&](std::size_t k) -> const engine::Tensor<T>& { return values[node.inputs[k]]; };
    switch (node.kind) {
      case NodeKind::Input:
        values[i] = input;
        break;
      case NodeKind::QpPlane:
        values[i] = engine::Tensor<T>(engine::Shape{s.n, 1, s.h, s.w},
                                      static_cast<T>(qp_plane_value(ctx->qp)));
        break;
      case NodeKind::Conv:
        values[i] = engine::conv2d_forward(in(0), weights.convs[node.param], node.name);
        break;
      case NodeKind::Modulate:
        values[i] = modulation::modulate_forward(in(0), std::span<const T>(weights.thetas[node.param]), *ctx);
        break;
      case NodeKind::Activate:
        values[i] = engine::activation_forward(node.act, in(0));
        break;
      case NodeKind::Concat:
        values[i] = engine::concat_channels(in(0), in(1));
        break;
      case NodeKind::Add:
        values[i] = engine::residual_add(in(0), in(1));
        break;
    }
    if (!tape) {
      for (std::size_t j : node.inputs) {
        if (last[j] == i && j != spec.output) values[j] = engine::Tensor<T>();
      }
    }
  }
  if (tape) {
    engine::Tensor<T> out = values[spec.output];
    tape->values = std::move(values);
    return out;
  }
  return std::move(values[spec.output]);
}

template <typename T>
ModelGrads<T> backward(const ModelSpec& spec, const ModelWeights<T>& weights, const Tape<T>& tape,
                       const engine::Tensor<T>& grad_out,
                       const std::optional<modulation::QpContext>& ctx) {
  validate_weights(spec, weights);
  require_context(spec, ctx);
  if (tape.values.size() != spec.nodes.size()) {
    throw std::invalid_argument(spec.name + ": tape does not belong to this model");
  }
  engine::require_same_shape(tape.values[spec.output].shape(), grad_out.shape(), spec.name + " backward");

  ModelGrads<T> result{engine::Tensor<T>(tape.values[0].shape()), zero_weights<T>(spec)};
  std::vector<engine::Tensor<T>> grads(spec.nodes.size());
  grads[spec.output] = grad_out;

  auto route = [&](std::size_t node, engine::Tensor<T>&& g) {
    if (grads[node].empty()) {
      grads[node] = std::move(g);
    } else {
      engine::accumulate(grads[node], g);
    }
  };

  for (std::size_t i = spec.nodes.size(); i-- > 0;) {
    if (grads[i].empty()) continue;
    const Node& node = spec.nodes[i];
    const engine::Tensor<T>& g = grads[i];
    auto in = [&](std::size_t k) -> const engine::Tensor<T>& { return tape.values[node.inputs[k]]; };
    switch (node.kind) {
      case NodeKind::Input:
        result.input = g;
        break;
      case NodeKind::QpPlane:
        break;
      case NodeKind::Conv: {
        auto cg = engine::conv2d_backward(in(0), weights.convs[node.param], g, node.name);
        auto& dst = result.params.convs[node.param];
        engine::accumulate(dst.weights, cg.weights);
        for (std::size_t k = 0; k < cg.bias.size(); ++k) dst.bias[k] += cg.bias[k];
        route(node.inputs[0], std::move(cg.input));
        break;
      }
      case NodeKind::Modulate: {
        auto mg = modulation::modulate_backward(in(0), std::span<const T>(weights.thetas[node.param]), *ctx, g);
        auto& dst = result.params.thetas[node.param];
        for (std::size_t k = 0; k < mg.theta.size(); ++k) dst[k] += mg.theta[k];
        route(node.inputs[0], std::move(mg.x));
        break;
      }
      case NodeKind::Activate:
        route(node.inputs[0], engine::activation_backward(node.act, in(0), g));
        break;
      case NodeKind::Concat: {
        auto [ga, gb] = engine::split_channels(g, spec.nodes[node.inputs[0]].channels);
        route(node.inputs[0], std::move(ga));
        route(node.inputs[1], std::move(gb));
        break;
      }
      case NodeKind::Add: {
        auto [ga, gb] = engine::residual_add_backward(g);
        route(node.inputs[0], std::move(ga));
        route(node.inputs[1], std::move(gb));
        break;
      }
    }
    grads[i] = engine::Tensor<T>();
  }
  return result;
}

template engine::Tensor<float> forward(const ModelSpec&, const ModelWeights<float>&,
                                       const engine::Tensor<float>&,
                                       const std::optional<modulation::QpContext>&, Tape<float>*);
template engine::Tensor<double> forward(const ModelSpec&, const ModelWeights<double>&,
                                        const engine::Tensor<double>&,
                                        const std::optional<modulation::QpContext>&, Tape<double>*);
template ModelGrads<float> backward(const ModelSpec&, const ModelWeights<float>&, const Tape<float>&,
                                    const engine::Tensor<float>&,
                                    const std::optional<modulation::QpContext>&);
template ModelGrads<double> backward(const ModelSpec&, const ModelWeights<double>&, const Tape<double>&,
                                     const engine::Tensor<double>&,
                                     const std::optional<modulation::QpContext>&);

}  // namespace qpf::models
