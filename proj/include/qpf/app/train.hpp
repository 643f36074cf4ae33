#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qpf/app/checkpoint.hpp"
#include "qpf/codec/dataset.hpp"

namespace qpf::app {

// global: one vanilla model on pooled QPs. separate: one vanilla model per
// QP. proposed: one qp-adaptive model. qpmap: one qp-map model.
enum class Strategy { Global, Separate, Proposed, QpMap };

std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view text);
models::Mode strategy_mode(Strategy s);

enum class Precision { Float, Double };

struct RunConfig {
  std::string model = "dcad";
  Strategy strategy = Strategy::Proposed;
  std::vector<int> qps = {22, 27, 32, 37};
  std::filesystem::path data_dir;
  std::size_t batch = 128;
  double lr = 1e-3;
  std::size_t iterations = 500;
  std::optional<std::uint64_t> seed;  // required; there is no clock-based default
  std::size_t crop = 0;                // training crop side; 0 = whole patch
  Precision precision = Precision::Float;
  std::filesystem::path out_dir;

  // Throws std::invalid_argument for a missing seed, zero batch, bad lr,
  // empty or out-of-range QPs, or an unknown model.
  void validate() const;
};

// Applies `key=value` lines (blank lines and '#' comments ignored) to `cfg`.
// Keys: model, strategy, qps (comma list), data, batch, lr, iterations, seed,
// crop, precision (float|double), out. Unknown keys are errors.
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);

std::vector<int> parse_qp_list(std::string_view text);

struct LossRecord {
  std::size_t iteration = 0;  // 1-based
  int qp = 0;                 // QP of the batch, -1 for batches pooled over QPs
  double loss = 0.0;          // before this iteration's update
  bool operator==(const LossRecord&) const = default;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> log;
};

using Progress = std::function<void(const LossRecord&)>;

// Trains one model. `pools` holds the training patches of each QP the model
// sees; global pools them, proposed and qpmap cycle through them one QP per
// batch (round-robin), separate expects exactly one pool. Throws
// DivergenceError naming the iteration when the loss becomes non-finite.
TrainResult train_model(const RunConfig& cfg, Strategy strategy, const std::vector<codec::PatchSet>& pools,
                        const Progress& progress = {});

struct TrainedFile {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_log;
  TrainResult result;
};

// Loads the training split of cfg.data_dir, trains according to
// cfg.strategy (separate: one model per QP) and writes
// <model>_<strategy>[_qpNN].qfck plus a .loss.csv next to it in cfg.out_dir.
std::vector<TrainedFile> run_training(const RunConfig& cfg, const Progress& progress = {});

std::string checkpoint_stem(const std::string& model, Strategy s, std::optional<int> qp);

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

}  // namespace qpf::app
