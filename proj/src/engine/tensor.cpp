#include "qpf/engine/tensor.hpp"

namespace qpf::engine {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void require_same_shape(const Shape& a, const Shape& b, std::string_view op) {
  if (!(a == b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

}  // namespace qpf::engine
