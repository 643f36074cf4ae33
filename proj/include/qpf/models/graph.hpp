#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "qpf/engine/activation.hpp"
#include "qpf/engine/conv.hpp"

namespace qpf::models {

// vanilla: plain CNN filter. qp_adaptive: every conv output is scaled by
// 1/(1 + theta*q). qp_map: a constant QP plane is concatenated to the input.
enum class Mode { Vanilla, QpAdaptive, QpMap };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view text);

enum class NodeKind { Input, QpPlane, Conv, Modulate, Activate, Concat, Add };

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

struct Node {
  NodeKind kind = NodeKind::Input;
  std::vector<std::size_t> inputs;
  std::size_t channels = 0;       // output channel count
  std::size_t param = kNoParam;   // conv index for Conv and Modulate nodes
  engine::Activation act;
  std::string name;
};

// Single-input, single-output DAG in topological order; nodes[0] is the
// 1-channel image input.
struct ModelSpec {
  std::string name;
  Mode mode = Mode::Vanilla;
  bool global_residual = false;
  bool approximate = false;  // stand-in for an architecture not fully specified
  std::vector<Node> nodes;
  std::vector<engine::ConvGeometry> convs;
  std::vector<std::string> conv_names;
  std::size_t output = 0;
};

// Constant plane value fed to qp_map models.
double qp_plane_value(int qp);

class GraphBuilder {
 public:
  GraphBuilder(std::string name, Mode mode);

  // Raw image input node.
  std::size_t image() const { return 0; }
  // Node feeding the first layer: the image, or image ++ QP plane in qp_map mode.
  std::size_t input();

  // Appends a conv (and its modulation node in qp_adaptive mode).
  std::size_t conv(std::size_t src, std::size_t out, std::size_t kernel, std::string name,
                   bool bias = true, std::size_t groups = 1);
  std::size_t activate(std::size_t src, engine::Activation act);
  std::size_t concat(std::size_t a, std::size_t b);
  std::size_t add(std::size_t a, std::size_t b);

  ModelSpec finish(std::size_t output, bool global_residual, bool approximate = false);

 private:
  std::size_t push(Node node);
  std::size_t channels(std::size_t node) const;

  ModelSpec spec_;
  bool input_taken_ = false;
};

// Throws ShapeError when channel bookkeeping is inconsistent anywhere in the graph.
void validate(const ModelSpec& spec);

}  // namespace qpf::models
