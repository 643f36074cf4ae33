#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qpf/models/graph.hpp"

namespace qpf::models {

// Ten 3x3 convs (1->64, 64->64 x8, 64->1), ReLU after the first nine, global
// input-to-output residual.
ModelSpec build_dcad(Mode mode);

// Variable-filter-size network: 5x5 stem, two parallel stages {5x5|3x3} and
// {3x3|1x1} merged by concatenation, 3x3 output, global residual. Convs carry
// no bias terms.
ModelSpec build_vrcnn(Mode mode);

inline constexpr std::size_t kLiuDefaultWidth = 32;
inline constexpr std::size_t kLiuBlocks = 8;
inline constexpr std::size_t kTucodecDefaultBlocks = 6;

// Depthwise-separable stand-in: 3x3 stem, kLiuBlocks (depthwise 3x3 + pointwise
// 1x1 + ReLU) pairs, 3x3 output. Approximate; flagged as such.
ModelSpec build_liu_dsc(Mode mode, std::size_t width = kLiuDefaultWidth);

// Residual stand-in: 3x3 stem, `blocks` residual blocks of two 3x3 convs with
// LeakyReLU, 3x3 output. Approximate; flagged as such.
ModelSpec build_tucodec_mini(Mode mode, std::size_t blocks = kTucodecDefaultBlocks);

// Builds from a backbone name: "dcad", "vrcnn", "liu[:width]", "tucodec[:blocks]".
ModelSpec build_model(std::string_view name, Mode mode);

std::vector<std::string> backbone_names();

// Reference counts the stand-ins are sized against (vanilla mode).
std::size_t reference_param_count(std::string_view backbone);

}  // namespace qpf::models
