// qpfilter: dataset generation, training, evaluation and oracle checks for
// QP-adaptive CNN loop filters on a DCT codec simulator.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpf/app/checkpoint.hpp"
#include "qpf/app/evaluate.hpp"
#include "qpf/app/oracle.hpp"
#include "qpf/app/train.hpp"
#include "qpf/codec/dataset.hpp"
#include "qpf/errors.hpp"
#include "qpf/models/backbones.hpp"
#include "qpf/models/weights.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvariant = 2, kIo = 3 };

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using qpf::app::parse_qp_list;

void print_sweep(const std::vector<qpf::metrics::SweepCurve>& curves) {
  fmt::print("{:<20} {:<12} {:>4} {:>12} {:>12} {:>9}\n", "model", "mode", "qp", "psnr_anchor", "psnr_filt", "gain_db");
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      fmt::print("{:<20} {:<12} {:>4} {:>12.4f} {:>12.4f} {:>9.4f}\n", c.model, c.mode, p.qp, p.psnr_anchor,
                 p.psnr_filtered, p.gain_db());
    }
  }
}

std::vector<qpf::app::Checkpoint> load_all(const std::vector<std::string>& paths) {
  std::vector<qpf::app::Checkpoint> out;
  for (const auto& p : paths) out.push_back(qpf::app::load_checkpoint(p));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QP-adaptive CNN loop filter toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Encode images at each QP and write a patch store");
  std::optional<std::uint64_t> gen_seed;
  std::size_t gen_count = 8, gen_size = 128, gen_patch = 64, gen_val = 0;
  std::string gen_qps = "22,27,32,37", gen_out, gen_images;
  gen->add_option("--seed", gen_seed, "Synthetic image seed (required)")->required();
  gen->add_option("--count", gen_count, "Number of images")->capture_default_str();
  gen->add_option("--size", gen_size, "Synthetic image side in pixels")->capture_default_str();
  gen->add_option("--patch", gen_patch, "Patch side in pixels")->capture_default_str();
  gen->add_option("--qps", gen_qps, "Comma-separated QP list")->capture_default_str();
  gen->add_option("--val", gen_val, "Trailing images held out for validation")->capture_default_str();
  gen->add_option("--images", gen_images, "Directory of .pgm images instead of synthetic ones");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model (or one per QP for --strategy separate)");
  std::string train_config, train_strategy, train_qps, train_precision, train_data, train_out, train_model;
  std::optional<std::uint64_t> train_seed;
  std::size_t train_batch = 0, train_iters = 0, train_crop = 0;
  double train_lr = 0.0;
  std::size_t train_log_every = 100;
  train->add_option("--config", train_config, "key=value config file; flags override it");
  auto* o_model = train->add_option("--model", train_model, "Backbone: dcad, vrcnn, liu[:width], tucodec[:blocks]");
  auto* o_strategy = train->add_option("--strategy", train_strategy, "global | separate | proposed | qpmap");
  auto* o_qps = train->add_option("--qps", train_qps, "Comma-separated QP list");
  auto* o_data = train->add_option("--data", train_data, "Dataset directory from gen-data");
  auto* o_batch = train->add_option("--batch", train_batch, "Batch size (default 128)");
  auto* o_lr = train->add_option("--lr", train_lr, "Adam learning rate (default 1e-3)");
  auto* o_iters = train->add_option("--iterations", train_iters, "Iterations per model (default 500)");
  auto* o_seed = train->add_option("--seed", train_seed, "Seed (required here or in the config)");
  auto* o_crop = train->add_option("--crop", train_crop, "Random crop side; 0 trains on whole patches");
  auto* o_prec = train->add_option("--precision", train_precision, "float | double");
  auto* o_out = train->add_option("--out", train_out, "Output directory");
  train->add_option("--log-every", train_log_every, "Print the loss every N iterations (0: never)")->capture_default_str();

  // eval / sweep / compare
  std::string eval_data, eval_qps, eval_out, eval_mode;
  std::vector<std::string> eval_ckpts;
  auto add_eval_options = [&](CLI::App* cmd, bool many) {
    if (many) {
      cmd->add_option("--checkpoints", eval_ckpts, "Checkpoint files")->required()->expected(1, -1);
    } else {
      cmd->add_option("--checkpoint", eval_ckpts, "Checkpoint file")->required()->expected(1);
    }
    cmd->add_option("--data", eval_data, "Dataset directory")->required();
    cmd->add_option("--qps", eval_qps, "QP list (default: every QP in the dataset)");
    cmd->add_option("--out", eval_out, "CSV output path");
  };
  auto* eval = app.add_subcommand("eval", "PSNR gain of one checkpoint at each QP");
  add_eval_options(eval, false);
  eval->add_option("--mode", eval_mode, "Run in another mode (vanilla checkpoints can run qp-adaptive)");
  auto* sweep = app.add_subcommand("sweep", "QP sweep of several checkpoints");
  add_eval_options(sweep, true);
  auto* compare = app.add_subcommand("compare", "Strategy comparison table with parameter counts and BD-rates");
  add_eval_options(compare, true);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Spectral optimality, sub-band and noise-scaling checks");
  qpf::app::OracleConfig ocfg;
  std::string oracle_out;
  oracle->add_option("--bins", ocfg.bins, "Frequency bins per spectrum")->capture_default_str();
  oracle->add_option("--seed", ocfg.seed, "Seed")->capture_default_str();
  oracle->add_option("--out", oracle_out, "Directory for CSV reports");

  // params
  auto* params = app.add_subcommand("params", "Parameter counts per backbone and mode");
  std::vector<std::string> param_models = {"dcad", "vrcnn", "liu", "tucodec"};
  params->add_option("--model", param_models, "Backbones")->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      qpf::codec::DatasetSpec spec;
      spec.seed = *gen_seed;
      spec.count = gen_count;
      spec.image_size = gen_size;
      spec.patch = gen_patch;
      spec.qps = parse_qp_list(gen_qps);
      spec.validation_images = gen_val;
      if (!gen_images.empty()) spec.image_dir = gen_images;
      const auto entries = qpf::codec::prepare_dataset(spec, gen_out);
      std::map<std::pair<std::string, int>, std::size_t> counts;
      std::size_t total = 0;
      for (const auto& e : entries) {
        counts[{e.split, e.qp}] += e.patches;
        total += e.patches;
      }
      for (const auto& [key, n] : counts) fmt::print("{:<5} qp {:>2}: {} samples\n", key.first, key.second, n);
      fmt::print("total: {} samples in {}\n", total, gen_out);
    } else if (*train) {
      qpf::app::RunConfig cfg;
      if (!train_config.empty()) qpf::app::apply_config_file(train_config, cfg);
      if (*o_model) cfg.model = train_model;
      if (*o_strategy) cfg.strategy = qpf::app::parse_strategy(train_strategy);
      if (*o_qps) cfg.qps = parse_qp_list(train_qps);
      if (*o_data) cfg.data_dir = train_data;
      if (*o_batch) cfg.batch = train_batch;
      if (*o_lr) cfg.lr = train_lr;
      if (*o_iters) cfg.iterations = train_iters;
      if (*o_seed) cfg.seed = train_seed;
      if (*o_crop) cfg.crop = train_crop;
      if (*o_prec) {
        if (train_precision != "float" && train_precision != "double") {
          throw std::invalid_argument("--precision must be float or double");
        }
        cfg.precision = train_precision == "double" ? qpf::app::Precision::Double : qpf::app::Precision::Float;
      }
      if (*o_out) cfg.out_dir = train_out;
      if (cfg.data_dir.empty()) throw std::invalid_argument("no dataset given (--data or data= in the config)");
      if (cfg.out_dir.empty()) throw std::invalid_argument("no output directory given (--out or out=)");
      auto progress = [&](const qpf::app::LossRecord& r) {
        if (train_log_every > 0 && (r.iteration % train_log_every == 0 || r.iteration == 1)) {
          fmt::print("iter {:>6}  qp {:>3}  loss {:.6e}\n", r.iteration, r.qp, r.loss);
          std::fflush(stdout);
        }
      };
      for (const auto& f : qpf::app::run_training(cfg, progress)) {
        const auto spec = qpf::app::checkpoint_spec(f.result.checkpoint);
        fmt::print("wrote {} ({} parameters, {} theta values)\n", f.checkpoint.string(),
                   qpf::models::count_params(spec).total(), qpf::models::count_params(spec).thetas);
      }
    } else if (*eval || *sweep || *compare) {
      const qpf::codec::SampleStore store(eval_data);
      const std::vector<int> qps = eval_qps.empty() ? store.qps() : parse_qp_list(eval_qps);
      const auto ckpts = load_all(eval_ckpts);
      std::vector<qpf::metrics::SweepCurve> curves;
      if (*compare) {
        const auto c = qpf::app::compare_checkpoints(ckpts, store, qps);
        curves = c.curves;
        print_sweep(curves);
        fmt::print("\n{}", qpf::app::format_comparison(c));
      } else {
        std::optional<qpf::models::Mode> mode;
        if (!eval_mode.empty()) mode = qpf::models::parse_mode(eval_mode);
        for (const auto& ck : ckpts) {
          curves.push_back(qpf::app::sweep_checkpoint(ck, qpf::app::curve_label(ck), store, qps, mode));
        }
        print_sweep(curves);
      }
      if (!eval_out.empty()) qpf::metrics::write_sweep_csv(eval_out, curves);
    } else if (*oracle) {
      if (!oracle_out.empty()) ocfg.out_dir = oracle_out;
      const auto s = qpf::app::run_oracle(ocfg);
      fmt::print("{}", qpf::app::format_oracle(s));
      if (!s.passed()) throw InvariantFailure("oracle invariant violated");
    } else if (*params) {
      fmt::print("{:<12} {:<12} {:>9} {:>8} {:>7} {:>9}  {}\n", "model", "mode", "weights", "biases", "theta", "total", "");
      for (const auto& name : param_models) {
        for (auto mode : {qpf::models::Mode::Vanilla, qpf::models::Mode::QpAdaptive, qpf::models::Mode::QpMap}) {
          const auto r = qpf::models::count_params(qpf::models::build_model(name, mode));
          fmt::print("{:<12} {:<12} {:>9} {:>8} {:>7} {:>9}  {}\n", r.model, qpf::models::to_string(mode), r.weights,
                     r.biases, r.thetas, r.total(), r.approximate ? "(approximate stand-in)" : "");
        }
      }
    }
  } catch (const qpf::IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const qpf::FormatError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const qpf::DivergenceError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvariant;
  } catch (const InvariantFailure& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvariant;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::out_of_range& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvariant;
  }
  return kOk;
}
