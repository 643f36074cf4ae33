#pragma once

// Gradient and identity suites shared by the unit tests and the acceptance run.

#include <cstdint>
#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace qpf::testing {

struct NamedCheck {
  std::string name;
  GradCheckStats stats;
};

// Layer-level checks: several conv geometries (plain, grouped, depthwise,
// 1x1, 5x5, bias-free), identity/ReLU/LeakyReLU, concat, residual add and
// modulation (input and theta).
std::vector<NamedCheck> layer_gradient_checks(std::uint64_t seed);

// Full-network check of one backbone in qp_adaptive mode with random
// non-zero biases and thetas: all input pixels and a seeded sample of every
// conv's weights, biases and thetas. `side` is the input size.
NamedCheck backbone_gradient_check(const std::string& name, std::uint64_t seed, std::size_t side = 8,
                                   std::size_t per_conv = 24);

// True when qp_adaptive with every theta = 0 reproduces the vanilla output
// bit for bit at `qp`, in both float and double.
bool theta_zero_identity(const std::string& backbone, int qp, std::uint64_t seed);

}  // namespace qpf::testing
