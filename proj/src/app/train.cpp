#include "qpf/app/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qpf/engine/adam.hpp"
#include "qpf/engine/loss.hpp"
#include "qpf/errors.hpp"
#include "qpf/models/backbones.hpp"
#include "qpf/models/network.hpp"

namespace qpf::app {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Global:
      return "global";
    case Strategy::Separate:
      return "separate";
    case Strategy::Proposed:
      return "proposed";
    case Strategy::QpMap:
      return "qpmap";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "global") return Strategy::Global;
  if (text == "separate") return Strategy::Separate;
  if (text == "proposed") return Strategy::Proposed;
  if (text == "qpmap" || text == "qp-map") return Strategy::QpMap;
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "' (global|separate|proposed|qpmap)");
}

models::Mode strategy_mode(Strategy s) {
  switch (s) {
    case Strategy::Proposed:
      return models::Mode::QpAdaptive;
    case Strategy::QpMap:
      return models::Mode::QpMap;
    default:
      return models::Mode::Vanilla;
  }
}

void RunConfig::validate() const {
  if (!seed) throw std::invalid_argument("a seed is required");
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be positive");
  if (qps.empty()) throw std::invalid_argument("qp list is empty");
  for (int qp : qps) {
    if (qp < modulation::kMinQp || qp > modulation::kMaxQp) {
      throw std::invalid_argument("qp " + std::to_string(qp) + " outside [0, 63]");
    }
  }
  models::build_model(model, models::Mode::Vanilla);
}

std::vector<int> parse_qp_list(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw std::invalid_argument("bad QP list '" + std::string(text) + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto number = [&](auto& dst) {
      const auto res = std::from_chars(value.data(), value.data() + value.size(), dst);
      if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": bad value for " + key);
      }
    };
    if (key == "model") {
      cfg.model = value;
    } else if (key == "strategy") {
      cfg.strategy = parse_strategy(value);
    } else if (key == "qps") {
      cfg.qps = parse_qp_list(value);
    } else if (key == "data") {
      cfg.data_dir = value;
    } else if (key == "batch") {
      number(cfg.batch);
    } else if (key == "lr") {
      number(cfg.lr);
    } else if (key == "iterations") {
      number(cfg.iterations);
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      number(seed);
      cfg.seed = seed;
    } else if (key == "crop") {
      number(cfg.crop);
    } else if (key == "precision") {
      if (value != "float" && value != "double") throw std::invalid_argument("precision must be float or double");
      cfg.precision = value == "double" ? Precision::Double : Precision::Float;
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
}

namespace {

struct Pick {
  std::size_t pool;
  std::size_t patch;
};

template <typename T>
void fill_batch(const std::vector<codec::PatchSet>& pools, const std::vector<Pick>& picks,
                const std::vector<std::pair<std::size_t, std::size_t>>& offsets, std::size_t crop,
                engine::Tensor<T>& input, engine::Tensor<T>& target) {
  const T scale = T{1} / T{255};
  for (std::size_t b = 0; b < picks.size(); ++b) {
    const auto& set = pools[picks[b].pool];
    const std::size_t base = picks[b].patch * set.patch * set.patch;
    const auto [ox, oy] = offsets[b];
    T* in = input.plane(b, 0);
    T* tg = target.plane(b, 0);
    for (std::size_t y = 0; y < crop; ++y) {
      for (std::size_t x = 0; x < crop; ++x) {
        const std::size_t src = base + (oy + y) * set.patch + ox + x;
        in[y * crop + x] = static_cast<T>(set.recon[src]) * scale;
        tg[y * crop + x] = static_cast<T>(set.original[src]) * scale;
      }
    }
  }
}

template <typename T>
TrainResult train_typed(const RunConfig& cfg, Strategy strategy, const std::vector<codec::PatchSet>& pools,
                        const Progress& progress) {
  cfg.validate();
  if (pools.empty()) throw std::invalid_argument("no training data");
  if (strategy == Strategy::Separate && pools.size() != 1) {
    throw std::invalid_argument("separate strategy trains on exactly one QP");
  }
  const std::size_t patch = pools.front().patch;
  for (const auto& p : pools) {
    if (p.count == 0) throw std::invalid_argument("empty training pool at qp " + std::to_string(p.qp));
    if (p.patch != patch) throw std::invalid_argument("training pools differ in patch size");
  }
  const std::size_t crop = cfg.crop == 0 ? patch : cfg.crop;
  if (crop > patch) throw std::invalid_argument("crop larger than the stored patches");

  const models::Mode mode = strategy_mode(strategy);
  const models::ModelSpec spec = models::build_model(cfg.model, mode);
  models::ModelWeights<T> weights = models::init_weights<T>(spec, *cfg.seed);
  engine::Adam<T> adam(engine::AdamConfig{cfg.lr});

  // Sampling stream kept separate from the initialization stream.
  std::mt19937_64 rng(*cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> pooled_offsets;
  std::size_t pooled_total = 0;
  for (const auto& p : pools) {
    pooled_offsets.push_back(pooled_total);
    pooled_total += p.count;
  }

  TrainResult result;
  engine::Tensor<T> input(engine::Shape{cfg.batch, 1, crop, crop});
  engine::Tensor<T> target(input.shape());
  std::vector<Pick> picks(cfg.batch);
  std::vector<std::pair<std::size_t, std::size_t>> offsets(cfg.batch);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const bool pooled = strategy == Strategy::Global;
    const std::size_t pool = pooled ? 0 : (it - 1) % pools.size();
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      if (pooled) {
        std::size_t flat = std::uniform_int_distribution<std::size_t>(0, pooled_total - 1)(rng);
        std::size_t p = 0;
        while (p + 1 < pools.size() && flat >= pooled_offsets[p + 1]) ++p;
        picks[b] = {p, flat - pooled_offsets[p]};
      } else {
        picks[b] = {pool, std::uniform_int_distribution<std::size_t>(0, pools[pool].count - 1)(rng)};
      }
      std::uniform_int_distribution<std::size_t> off(0, patch - crop);
      const std::size_t ox = off(rng);
      const std::size_t oy = off(rng);
      offsets[b] = {ox, oy};
    }
    fill_batch(pools, picks, offsets, crop, input, target);

    const int qp = pooled ? -1 : pools[pool].qp;
    std::optional<modulation::QpContext> ctx;
    if (mode != models::Mode::Vanilla) ctx = modulation::QpContext::from_qp(qp);

    double loss = 0.0;
    try {
      models::Tape<T> tape;
      const auto out = models::forward(spec, weights, input, ctx, &tape);
      auto l = engine::mse_loss(out, target);
      loss = l.value;
      if (!std::isfinite(loss)) throw NonFiniteError("loss");
      auto grads = models::backward(spec, weights, tape, l.grad, ctx);
      const auto params = models::parameter_spans(weights);
      const auto& cgrads = grads.params;
      const auto gspans = models::parameter_spans(cgrads);
      adam.step(params, gspans);
      models::clamp_all_theta(weights);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(it, "training diverged at iteration " + std::to_string(it) + " (" + e.what() + ")");
    }
    result.log.push_back(LossRecord{it, qp, loss});
    if (progress) progress(result.log.back());
  }

  Checkpoint& ck = result.checkpoint;
  ck.model = spec.name;
  ck.mode = mode;
  ck.strategy = to_string(strategy);
  ck.seed = *cfg.seed;
  ck.iterations = cfg.iterations;
  for (const auto& p : pools) ck.qps.push_back(p.qp);
  ck.weights = weights.template cast<float>();
  return result;
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

TrainResult train_model(const RunConfig& cfg, Strategy strategy, const std::vector<codec::PatchSet>& pools,
                        const Progress& progress) {
  if (cfg.precision == Precision::Double) return train_typed<double>(cfg, strategy, pools, progress);
  return train_typed<float>(cfg, strategy, pools, progress);
}

std::string checkpoint_stem(const std::string& model, Strategy s, std::optional<int> qp) {
  std::string stem = model;
  for (char& c : stem) {
    if (c == ':') c = '-';
  }
  stem += "_" + to_string(s);
  if (qp) stem += "_qp" + std::to_string(*qp);
  return stem;
}

std::vector<TrainedFile> run_training(const RunConfig& cfg, const Progress& progress) {
  cfg.validate();
  const codec::SampleStore store(cfg.data_dir);
  std::vector<codec::PatchSet> pools;
  for (int qp : cfg.qps) pools.push_back(store.load("train", qp));

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());

  const std::string model = models::build_model(cfg.model, models::Mode::Vanilla).name;
  std::vector<TrainedFile> out;
  auto finish = [&](TrainResult r, std::optional<int> qp) {
    const std::string stem = checkpoint_stem(model, cfg.strategy, qp);
    TrainedFile f{cfg.out_dir / (stem + ".qfck"), cfg.out_dir / (stem + ".loss.csv"), std::move(r)};
    save_checkpoint(f.checkpoint, f.result.checkpoint);
    write_loss_log(f.loss_log, f.result.log);
    out.push_back(std::move(f));
  };
  if (cfg.strategy == Strategy::Separate) {
    for (const auto& p : pools) finish(train_model(cfg, cfg.strategy, {p}, progress), p.qp);
  } else {
    finish(train_model(cfg, cfg.strategy, pools, progress), std::nullopt);
  }
  return out;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,qp,loss\n";
  for (const auto& r : log) out << r.iteration << ',' << r.qp << ',' << num(r.loss) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "iteration,qp,loss") throw FormatError(path.string() + ": bad header");
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[3];
    for (auto& s : f) {
      if (!std::getline(ss, s, ',')) throw FormatError(path.string() + ": bad row '" + line + "'");
    }
    LossRecord r;
    auto parse = [&](const std::string& s, auto& v) {
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw FormatError(path.string() + ": bad value '" + s + "'");
      }
    };
    parse(f[0], r.iteration);
    parse(f[1], r.qp);
    parse(f[2], r.loss);
    out.push_back(r);
  }
  return out;
}

}  // namespace qpf::app
