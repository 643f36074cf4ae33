#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpf/app/checkpoint.hpp"
#include "qpf/app/train.hpp"
#include "qpf/codec/dataset.hpp"
#include "qpf/metrics/metrics.hpp"

namespace qpf::app {

// Runs the model over every patch of `set` (in batches of `batch`) at the
// set's QP, rounds the output to 8-bit and returns the filtered pixels.
std::vector<std::uint8_t> filter_patches(const models::ModelSpec& spec, const models::ModelWeights<float>& weights,
                                         const codec::PatchSet& set, std::size_t batch = 16);

// Anchor and filtered PSNR over all pixels of `set`.
metrics::SweepPoint evaluate_set(const models::ModelSpec& spec, const models::ModelWeights<float>& weights,
                                 const codec::PatchSet& set, double rate_bits);

// A checkpoint's curve over `qps` on `split` ("val", falling back to "train"
// when the store has no validation images). `mode` overrides the checkpoint
// mode (vanilla checkpoints may run qp-adaptive with theta = 0).
metrics::SweepCurve sweep_checkpoint(const Checkpoint& ckpt, const std::string& label,
                                     const codec::SampleStore& store, const std::vector<int>& qps,
                                     std::optional<models::Mode> mode = std::nullopt);

std::string eval_split(const codec::SampleStore& store);

// Default curve label: checkpoint strategy, plus the QP for per-QP models.
std::string curve_label(const Checkpoint& ckpt);

struct CompareRow {
  std::string label;
  std::string strategy;
  std::size_t params = 0;
  double mean_gain_db = 0.0;
  double bd_rate_vs_anchor = 0.0;  // percent
  double bd_rate_vs_first = 0.0;   // percent, against the first row
};

struct Comparison {
  std::vector<metrics::SweepCurve> curves;  // every checkpoint at every QP
  std::vector<CompareRow> rows;
};

// Sweeps every checkpoint. When per-QP "separate" checkpoints cover every QP
// in `qps`, an extra "separate" curve takes each QP from the model trained at
// that QP, and its params column is the per-model count.
Comparison compare_checkpoints(const std::vector<Checkpoint>& ckpts, const codec::SampleStore& store,
                               const std::vector<int>& qps);

std::string format_comparison(const Comparison& c);

}  // namespace qpf::app
