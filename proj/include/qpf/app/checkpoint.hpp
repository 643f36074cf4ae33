#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qpf/models/graph.hpp"
#include "qpf/models/weights.hpp"

namespace qpf::app {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "QFCK" | u32 version | str model | u8 mode | str strategy | u64 seed |
//   u64 iterations | u32 nqp, i32 qp[nqp] | u32 nblocks | blocks
// where str = u32 length + bytes and each block is
//   str name | u32 ndims | u64 dims[ndims] | f32 data[prod(dims)].
// Blocks are named <conv>.weight, <conv>.bias and <conv>.theta.
struct Checkpoint {
  std::string model;  // canonical backbone name, e.g. "dcad" or "liu:32"
  models::Mode mode = models::Mode::Vanilla;
  std::string strategy;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  std::vector<int> qps;
  models::ModelWeights<float> weights;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws IoError if unreadable, FormatError on bad magic, unknown version,
// shape/length mismatches or trailing data.
Checkpoint load_checkpoint(const std::filesystem::path& path);

models::ModelSpec checkpoint_spec(const Checkpoint& ckpt);

// Weights for a model in `mode` from `ckpt`. A vanilla checkpoint loads into
// qp-adaptive mode with theta = 0; every other mode change is rejected with
// std::invalid_argument.
models::ModelWeights<float> weights_for_mode(const Checkpoint& ckpt, models::Mode mode);

}  // namespace qpf::app
