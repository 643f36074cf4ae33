#include "qpf/app/evaluate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "qpf/codec/plane.hpp"
#include "qpf/models/backbones.hpp"
#include "qpf/models/network.hpp"

namespace qpf::app {

std::vector<std::uint8_t> filter_patches(const models::ModelSpec& spec, const models::ModelWeights<float>& weights,
                                         const codec::PatchSet& set, std::size_t batch) {
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  const std::size_t px = set.patch * set.patch;
  std::optional<modulation::QpContext> ctx;
  if (spec.mode != models::Mode::Vanilla) ctx = modulation::QpContext::from_qp(set.qp);
  std::vector<std::uint8_t> out(set.recon.size());
  for (std::size_t first = 0; first < set.count; first += batch) {
    const std::size_t n = std::min(batch, set.count - first);
    engine::Tensor<float> input(engine::Shape{n, 1, set.patch, set.patch});
    auto in = input.data();
    for (std::size_t i = 0; i < n * px; ++i) in[i] = static_cast<float>(set.recon[first * px + i]) / 255.0f;
    const auto y = models::forward(spec, weights, input, ctx);
    const auto yd = y.data();
    for (std::size_t i = 0; i < n * px; ++i) out[first * px + i] = codec::to_byte(static_cast<double>(yd[i]) * 255.0);
  }
  return out;
}

metrics::SweepPoint evaluate_set(const models::ModelSpec& spec, const models::ModelWeights<float>& weights,
                                 const codec::PatchSet& set, double rate_bits) {
  const auto filtered = filter_patches(spec, weights, set);
  metrics::SweepPoint p;
  p.qp = set.qp;
  p.psnr_anchor = metrics::psnr(std::span<const std::uint8_t>(set.original), std::span<const std::uint8_t>(set.recon));
  p.psnr_filtered = metrics::psnr(std::span<const std::uint8_t>(set.original), std::span<const std::uint8_t>(filtered));
  p.rate_bits = rate_bits;
  return p;
}

std::string eval_split(const codec::SampleStore& store) { return store.has_split("val") ? "val" : "train"; }

metrics::SweepCurve sweep_checkpoint(const Checkpoint& ckpt, const std::string& label,
                                     const codec::SampleStore& store, const std::vector<int>& qps,
                                     std::optional<models::Mode> mode) {
  const models::Mode m = mode.value_or(ckpt.mode);
  const models::ModelSpec spec = models::build_model(ckpt.model, m);
  const auto weights = weights_for_mode(ckpt, m);
  const std::string split = eval_split(store);
  metrics::SweepCurve curve{label, models::to_string(m), {}};
  for (int qp : qps) curve.points.push_back(evaluate_set(spec, weights, store.load(split, qp), store.rate_bits(split, qp)));
  return curve;
}

std::string curve_label(const Checkpoint& ckpt) {
  std::string label = ckpt.strategy.empty() ? "model" : ckpt.strategy;
  if (ckpt.strategy == "separate" && ckpt.qps.size() == 1) label += "_qp" + std::to_string(ckpt.qps.front());
  return label;
}

namespace {

double safe_bd_rate(const std::vector<metrics::RdPoint>& a, const std::vector<metrics::RdPoint>& b) {
  try {
    return metrics::bd_rate(a, b);
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

Comparison compare_checkpoints(const std::vector<Checkpoint>& ckpts, const codec::SampleStore& store,
                               const std::vector<int>& qps) {
  if (ckpts.empty()) throw std::invalid_argument("nothing to compare");
  Comparison c;
  std::vector<std::size_t> params;
  std::vector<std::string> strategies;
  std::map<int, std::size_t> separate_at;  // qp -> index into curves
  for (const auto& ck : ckpts) {
    const auto spec = checkpoint_spec(ck);
    c.curves.push_back(sweep_checkpoint(ck, curve_label(ck), store, qps));
    params.push_back(models::count_params(spec).total());
    strategies.push_back(ck.strategy);
    if (ck.strategy == "separate" && ck.qps.size() == 1) separate_at.emplace(ck.qps.front(), c.curves.size() - 1);
  }

  std::vector<metrics::SweepCurve> table(c.curves);
  const bool separate_complete =
      std::all_of(qps.begin(), qps.end(), [&](int qp) { return separate_at.count(qp) > 0; });
  if (separate_complete && separate_at.size() > 1) {
    metrics::SweepCurve merged{"separate", "vanilla", {}};
    for (std::size_t i = 0; i < qps.size(); ++i) merged.points.push_back(c.curves[separate_at[qps[i]]].points[i]);
    params.push_back(params[separate_at[qps.front()]]);
    strategies.push_back("separate");
    table.push_back(std::move(merged));
  }

  for (std::size_t i = 0; i < table.size(); ++i) {
    CompareRow row;
    row.label = table[i].model;
    row.strategy = strategies[i];
    row.params = params[i];
    row.mean_gain_db = table[i].mean_gain();
    row.bd_rate_vs_anchor = safe_bd_rate(table[i].anchor_rd(), table[i].filtered_rd());
    row.bd_rate_vs_first = safe_bd_rate(table.front().filtered_rd(), table[i].filtered_rd());
    c.rows.push_back(row);
  }
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::string out = fmt::format("{:<16} {:<10} {:>10} {:>14} {:>14} {:>14}\n", "model", "strategy", "params",
                                "mean gain dB", "BD-rate anchor", "BD-rate first");
  for (const auto& r : c.rows) {
    out += fmt::format("{:<16} {:<10} {:>10} {:>14.4f} {:>13.3f}% {:>13.3f}%\n", r.label, r.strategy, r.params,
                       r.mean_gain_db, r.bd_rate_vs_anchor, r.bd_rate_vs_first);
  }
  return out;
}

}  // namespace qpf::app
