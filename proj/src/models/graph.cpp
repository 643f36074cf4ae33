#include "qpf/models/graph.hpp"

#include <stdexcept>

#include "qpf/errors.hpp"

namespace qpf::models {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Vanilla: return "vanilla";
    case Mode::QpAdaptive: return "qp-adaptive";
    case Mode::QpMap: return "qp-map";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "vanilla") return Mode::Vanilla;
  if (text == "qp-adaptive" || text == "adaptive" || text == "proposed") return Mode::QpAdaptive;
  if (text == "qp-map" || text == "qpmap") return Mode::QpMap;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

// HEVC-style normalization by the largest 8-bit QP.
double qp_plane_value(int qp) { return qp / 51.0; }

GraphBuilder::GraphBuilder(std::string name, Mode mode) {
  spec_.name = std::move(name);
  spec_.mode = mode;
  Node in;
  in.kind = NodeKind::Input;
  in.channels = 1;
  in.name = "input";
  spec_.nodes.push_back(in);
}

std::size_t GraphBuilder::input() {
  if (input_taken_) throw std::logic_error("GraphBuilder::input called twice");
  input_taken_ = true;
  if (spec_.mode != Mode::QpMap) return image();
  Node plane;
  plane.kind = NodeKind::QpPlane;
  plane.channels = 1;
  plane.name = "qp_plane";
  const std::size_t p = push(plane);
  return concat(image(), p);
}

std::size_t GraphBuilder::push(Node node) {
  for (std::size_t in : node.inputs) {
    if (in >= spec_.nodes.size()) throw std::logic_error("GraphBuilder: forward reference");
  }
  spec_.nodes.push_back(std::move(node));
  return spec_.nodes.size() - 1;
}

std::size_t GraphBuilder::channels(std::size_t node) const { return spec_.nodes.at(node).channels; }

std::size_t GraphBuilder::conv(std::size_t src, std::size_t out, std::size_t kernel, std::string name,
                               bool bias, std::size_t groups) {
  engine::ConvGeometry g{channels(src), out, kernel, kernel, groups, bias};
  g.validate(name);
  const std::size_t index = spec_.convs.size();
  spec_.convs.push_back(g);
  spec_.conv_names.push_back(name);

  Node c;
  c.kind = NodeKind::Conv;
  c.inputs = {src};
  c.channels = out;
  c.param = index;
  c.name = name;
  std::size_t id = push(c);
  if (spec_.mode == Mode::QpAdaptive) {
    Node m;
    m.kind = NodeKind::Modulate;
    m.inputs = {id};
    m.channels = out;
    m.param = index;
    m.name = name + ".mod";
    id = push(m);
  }
  return id;
}

std::size_t GraphBuilder::activate(std::size_t src, engine::Activation act) {
  Node a;
  a.kind = NodeKind::Activate;
  a.inputs = {src};
  a.channels = channels(src);
  a.act = act;
  a.name = spec_.nodes[src].name + "." + act.name();
  return push(a);
}

std::size_t GraphBuilder::concat(std::size_t a, std::size_t b) {
  Node c;
  c.kind = NodeKind::Concat;
  c.inputs = {a, b};
  c.channels = channels(a) + channels(b);
  c.name = "concat(" + spec_.nodes[a].name + "," + spec_.nodes[b].name + ")";
  return push(c);
}

std::size_t GraphBuilder::add(std::size_t a, std::size_t b) {
  if (channels(a) != channels(b)) {
    throw ShapeError("add: channel mismatch " + std::to_string(channels(a)) + " vs " +
                     std::to_string(channels(b)));
  }
  Node s;
  s.kind = NodeKind::Add;
  s.inputs = {a, b};
  s.channels = channels(a);
  s.name = "add(" + spec_.nodes[a].name + "," + spec_.nodes[b].name + ")";
  return push(s);
}

ModelSpec GraphBuilder::finish(std::size_t output, bool global_residual, bool approximate) {
  spec_.output = output;
  spec_.global_residual = global_residual;
  spec_.approximate = approximate;
  validate(spec_);
  return spec_;
}

void validate(const ModelSpec& spec) {
  if (spec.nodes.empty() || spec.nodes[0].kind != NodeKind::Input || spec.nodes[0].channels != 1) {
    throw ShapeError(spec.name + ": graph must start with a 1-channel input");
  }
  if (spec.output >= spec.nodes.size() || spec.nodes[spec.output].channels != 1) {
    throw ShapeError(spec.name + ": output must be a 1-channel node");
  }
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const Node& n = spec.nodes[i];
    for (std::size_t in : n.inputs) {
      if (in >= i) throw ShapeError(spec.name + ": node " + n.name + " is not topologically ordered");
    }
    auto ch = [&](std::size_t k) { return spec.nodes[n.inputs.at(k)].channels; };
    switch (n.kind) {
      case NodeKind::Input:
      case NodeKind::QpPlane:
        if (!n.inputs.empty()) throw ShapeError(spec.name + ": source node with inputs");
        break;
      case NodeKind::Conv: {
        const auto& g = spec.convs.at(n.param);
        g.validate(n.name);
        if (ch(0) != g.in || n.channels != g.out) {
          throw ShapeError(spec.name + ": " + n.name + " channel bookkeeping inconsistent");
        }
        break;
      }
      case NodeKind::Modulate:
      case NodeKind::Activate:
        if (ch(0) != n.channels) throw ShapeError(spec.name + ": " + n.name + " changes channels");
        break;
      case NodeKind::Concat:
        if (ch(0) + ch(1) != n.channels) throw ShapeError(spec.name + ": " + n.name + " bad concat");
        break;
      case NodeKind::Add:
        if (ch(0) != n.channels || ch(1) != n.channels) {
          throw ShapeError(spec.name + ": " + n.name + " bad add");
        }
        break;
    }
  }
}

}  // namespace qpf::models
