#include "imm/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "imm/data/cgm.hpp"
#include "imm/data/normalize.hpp"
#include "imm/data/synthetic.hpp"
#include "imm/error.hpp"
#include "imm/eval/evaluate.hpp"
#include "imm/eval/reports.hpp"
#include "imm/model/checkpoint.hpp"
#include "imm/random.hpp"
#include "imm/train/trainer.hpp"

namespace imm::cli {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kPredictStream = 3;

const char* const kSplitNames[] = {"train", "val", "test"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

std::string series_source(const char* split, std::size_t id) {
  return std::string(split) + "/" + std::to_string(id);
}

Dataset load_synthetic(const RunConfig& cfg) {
  Dataset ds;
  ds.manifest.kind = "synthetic";
  const std::size_t enc = cfg.model.enc_len, pred = cfg.model.pred_len;
  std::vector<double> train_values;
  std::vector<data::WindowSample>* targets[] = {&ds.train, &ds.val, &ds.test};
  for (int s = 0; s < 3; ++s) {
    const auto path = cfg.data / (std::string(kSplitNames[s]) + ".csv");
    if (!std::filesystem::exists(path)) throw DataError("missing dataset file " + path.string());
    for (const auto& series : data::read_synthetic_csv(path)) {
      const auto source = series_source(kSplitNames[s], series.id);
      ds.manifest.splits[source] = kSplitNames[s];
      auto windows = data::windowize_values(series.value, source, enc, pred, cfg.stride);
      targets[s]->insert(targets[s]->end(), windows.begin(), windows.end());
      if (s == 0) train_values.insert(train_values.end(), series.value.begin(), series.value.end());
    }
  }
  if (train_values.empty()) throw DataError("synthetic training split is empty");
  std::string warning;
  ds.manifest.normalizer = data::fit_normalizer(train_values, &warning);
  if (!warning.empty()) ds.warnings.push_back(warning);
  return ds;
}

Dataset load_cgm(const RunConfig& cfg) {
  if (cfg.cgm_csv.empty()) throw ConfigError("dataset=cgm requires cgm_csv");
  Dataset ds;
  ds.manifest.kind = "cgm";
  std::vector<data::Segment> segments;
  for (const auto& series : data::ingest_csv(cfg.cgm_csv)) {
    data::SegmentOptions options;
    options.min_length = cfg.model.enc_len + cfg.model.pred_len;
    auto segs = data::segment(series, options);
    segments.insert(segments.end(), segs.begin(), segs.end());
  }
  auto parts = data::partition(std::move(segments), cfg.seed);
  if (!parts.warning.empty()) ds.warnings.push_back(parts.warning);

  std::set<std::string> known;
  std::vector<double> train_values;
  for (const auto& seg : parts.train) {
    known.insert(seg.subject_id);
    train_values.insert(train_values.end(), seg.values.begin(), seg.values.end());
  }
  std::size_t row = 1;
  for (const auto& id : known) ds.manifest.subjects[id] = row++;
  ds.subjects = known.size() + 1;
  ds.time_features = data::kCgmTimeFeatures;

  const std::vector<data::Segment>* sources[] = {&parts.train, &parts.val, &parts.test};
  std::vector<data::WindowSample>* targets[] = {&ds.train, &ds.val, &ds.test};
  for (int s = 0; s < 3; ++s) {
    for (const auto& seg : *sources[s]) {
      ds.manifest.splits[seg.id()] = kSplitNames[s];
      const auto it = ds.manifest.subjects.find(seg.subject_id);
      const std::size_t subject = it == ds.manifest.subjects.end() ? 0 : it->second;
      auto windows = data::windowize(seg, cfg.model.enc_len, cfg.model.pred_len, subject, cfg.stride);
      targets[s]->insert(targets[s]->end(), windows.begin(), windows.end());
    }
  }
  if (train_values.empty()) throw DataError("CGM training split is empty");
  std::string warning;
  ds.manifest.normalizer = data::fit_normalizer(train_values, &warning);
  if (!warning.empty()) ds.warnings.push_back(warning);
  return ds;
}

model::Transformer load_model(const std::filesystem::path& path, const Dataset& ds,
                              std::map<std::string, std::string>* meta) {
  auto ckpt = model::load_checkpoint(path);
  if (ckpt.config.time_features != ds.time_features || ckpt.config.subjects != ds.subjects) {
    throw DataError("checkpoint " + path.string() + " does not match the dataset features");
  }
  if (meta) *meta = ckpt.meta;
  return model::Transformer(ckpt.config, std::move(ckpt.params));
}

void check_model_against_run(const model::ModelConfig& ckpt, const RunConfig& cfg) {
  if (ckpt.enc_len != cfg.model.enc_len || ckpt.pred_len != cfg.model.pred_len) {
    throw ConfigError("checkpoint expects enc_len=" + std::to_string(ckpt.enc_len) +
                      " pred_len=" + std::to_string(ckpt.pred_len));
  }
}

/// Mixture for IMM checkpoints, Gaussian point comparator for MSE ones.
eval::EvalOptions eval_options(const RunConfig& cfg, const Dataset& ds,
                               const std::map<std::string, std::string>& meta) {
  eval::EvalOptions o;
  const auto loss = meta.count("loss") ? meta.at("loss") : std::string("imm");
  o.mode = loss == "mse" ? eval::PredictiveMode::PointGaussian : eval::PredictiveMode::Mixture;
  o.k = cfg.train.k_eval;
  o.seed = derive_seed(cfg.seed, kEvalStream);
  o.levels = cfg.levels;
  o.normalizer = ds.manifest.normalizer;
  if (ds.manifest.kind == "cgm") {
    o.windows = eval::minute_windows(cfg.model.pred_len);
    o.events = true;
  }
  return o;
}

std::string loglik_label(const std::map<std::string, std::string>& meta) {
  const auto it = meta.find("loss");
  return it != meta.end() && it->second == "mse" ? "gaussian_baseline" : "imm";
}

}  // namespace

const std::vector<data::WindowSample>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "'");
}

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds = cfg.dataset == "cgm" ? load_cgm(cfg) : load_synthetic(cfg);
  if (ds.train.empty()) {
    throw DataError("no training window fits enc_len + pred_len = " +
                    std::to_string(cfg.model.enc_len + cfg.model.pred_len));
  }
  data::normalize_windows(ds.manifest.normalizer, ds.train);
  data::normalize_windows(ds.manifest.normalizer, ds.val);
  data::normalize_windows(ds.manifest.normalizer, ds.test);
  ds.manifest.settings["enc_len"] = std::to_string(cfg.model.enc_len);
  ds.manifest.settings["pred_len"] = std::to_string(cfg.model.pred_len);
  ds.manifest.settings["seed"] = std::to_string(cfg.seed);
  ds.manifest.settings["stride"] = std::to_string(cfg.stride);
  return ds;
}

model::ModelConfig model_config_for(const RunConfig& cfg, const Dataset& ds) {
  model::ModelConfig m = cfg.model;
  m.time_features = ds.time_features;
  m.subjects = ds.subjects;
  return m;
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  make_dir(cfg.out);
  write_resolved_config(cfg.out / "resolved_config.txt", cfg);
  const auto dataset = data::generate_synthetic(cfg.synth, cfg.seed);
  const std::vector<data::SyntheticSeries>* splits[] = {&dataset.train, &dataset.val, &dataset.test};
  data::DatasetManifest manifest;
  manifest.kind = "synthetic";
  std::vector<double> train_values;
  for (int s = 0; s < 3; ++s) {
    data::write_synthetic_csv(cfg.out / (std::string(kSplitNames[s]) + ".csv"), *splits[s]);
    for (const auto& series : *splits[s]) {
      manifest.splits[series_source(kSplitNames[s], series.id)] = kSplitNames[s];
      if (s == 0) train_values.insert(train_values.end(), series.value.begin(), series.value.end());
    }
  }
  if (!train_values.empty()) manifest.normalizer = data::fit_normalizer(train_values);
  for (const auto& [k, v] : cfg.to_map()) {
    static const std::set<std::string> keep = {
        "seed", "n_train", "n_val", "n_test", "grid_start", "grid_end", "grid_step",
        "branch_prob", "length_scale", "amplitude", "obs_noise", "branch_slope"};
    if (keep.count(k)) manifest.settings[k] = v;
  }
  data::write_manifest(cfg.out / "dataset_manifest.txt", manifest);
  log << "synth: " << dataset.train.size() << '/' << dataset.val.size() << '/'
      << dataset.test.size() << " series written to " << cfg.out.string() << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const Dataset ds = load_dataset(cfg);
  for (const auto& w : ds.warnings) log << "warning: " << w << '\n';
  const auto mcfg = model_config_for(cfg, ds);
  model::Transformer model(mcfg, derive_seed(cfg.seed, kInitStream));

  make_dir(cfg.out);
  write_resolved_config(cfg.out / "resolved_config.txt", cfg);
  log << "train: " << ds.train.size() << " train / " << ds.val.size() << " val windows, "
      << model.params().scalar_count() << " parameters, loss " << train::to_string(cfg.train.loss)
      << '\n';
  const auto result = train::train(model, ds.train, ds.val, cfg.train, [&](const train::EpochRecord& r) {
    log << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_nll " << r.val_nll
        << std::endl;
  });
  train::write_training_log(cfg.out / "train_log.csv", result.log);

  model::Checkpoint ckpt{mcfg, model.params(), {}};
  ckpt.meta["loss"] = std::string(train::to_string(cfg.train.loss));
  ckpt.meta["best_epoch"] = std::to_string(result.best_epoch);
  ckpt.meta["epochs_run"] = std::to_string(result.log.size());
  ckpt.meta["seed"] = std::to_string(cfg.seed);
  ckpt.meta["norm_mean"] = num(ds.manifest.normalizer.mean);
  ckpt.meta["norm_scale"] = num(ds.manifest.normalizer.scale);
  model::save_checkpoint(cfg.out / "checkpoint.bin", ckpt);
  data::write_manifest(cfg.out / "dataset_manifest.txt", ds.manifest);
  log << "train: best epoch " << result.best_epoch << ", checkpoint written to "
      << (cfg.out / "checkpoint.bin").string() << '\n';
}

void cmd_predict(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty()) throw ConfigError("predict requires checkpoint");
  const Dataset ds = load_dataset(cfg);
  std::map<std::string, std::string> meta;
  const auto model = load_model(cfg.checkpoint, ds, &meta);
  check_model_against_run(model.config(), cfg);
  const auto& windows = ds.split(cfg.split);
  const auto& norm = ds.manifest.normalizer;
  const std::size_t k = cfg.deterministic ? 1 : cfg.train.k_eval;
  const std::uint64_t seed = derive_seed(cfg.seed, kPredictStream);
  const auto kind = model.config().base;

  make_dir(cfg.out);
  write_resolved_config(cfg.out / "resolved_config.txt", cfg);
  const auto path = cfg.out / "predictions.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "window,source,offset,horizon,row,draw,mean,sd,target\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    const auto sample = model.predict_distribution(w, k, derive_seed(seed, i), !cfg.deterministic);
    for (std::size_t h = 0; h < sample.horizon(); ++h) {
      const std::string prefix = std::to_string(i) + ',' + w.source + ',' + std::to_string(w.offset) +
                                 ',' + std::to_string(h + 1) + ',';
      out << prefix << "forecast,," << num(norm.invert(dist::mixture_mean(sample, h))) << ','
          << num(std::sqrt(dist::mixture_variance(kind, sample, h)) * norm.scale) << ','
          << num(w.y_raw[h]) << '\n';
      if (!cfg.emit_draws) continue;
      for (std::size_t j = 0; j < sample.k(); ++j) {
        const auto& d = sample.draw(j);
        out << prefix << "draw," << j << ',' << num(norm.invert(d.mean[h])) << ','
            << num(std::sqrt(dist::base_variance(kind, d.log_scale[h])) * norm.scale) << ','
            << num(w.y_raw[h]) << '\n';
      }
    }
  }
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
  log << "predict: " << windows.size() << " windows, k=" << k << ", written to " << path.string()
      << '\n';
}

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty()) throw ConfigError("eval requires checkpoint");
  const Dataset ds = load_dataset(cfg);
  std::map<std::string, std::string> meta;
  const auto model = load_model(cfg.checkpoint, ds, &meta);
  check_model_against_run(model.config(), cfg);
  std::map<std::string, std::string> compare_meta;
  std::optional<model::Transformer> compare;
  if (!cfg.compare.empty()) {
    compare.emplace(load_model(cfg.compare, ds, &compare_meta));
    check_model_against_run(compare->config(), cfg);
  }
  const auto& windows = ds.split(cfg.split);

  make_dir(cfg.out);
  write_resolved_config(cfg.out / "resolved_config.txt", cfg);
  const auto ev = eval::evaluate(model, windows, eval_options(cfg, ds, meta));
  for (const auto& w : ev.warnings) log << "warning: " << w << '\n';
  eval::ReportBundle bundle{ev.metrics, ev.calibration, ev.sharpness, {}};
  if (ev.avg_ll) bundle.loglik.push_back({loglik_label(meta), *ev.avg_ll});
  if (compare) {
    const auto other = eval::evaluate(*compare, windows, eval_options(cfg, ds, compare_meta));
    if (other.avg_ll) bundle.loglik.push_back({loglik_label(compare_meta), *other.avg_ll});
  }
  eval::emit_reports(bundle, cfg.out, cfg.svg);
  for (const auto& row : bundle.loglik) log << "eval: " << row.model << " avg_ll " << row.avg_ll << '\n';
  log << "eval: reports written to " << cfg.out.string() << '\n';
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Infinite mixture forecaster"};
  app.require_subcommand(1);
  std::string config_file;
  std::map<std::string, std::string> flags;
  std::vector<CLI::App*> commands;
  for (const char* name : {"synth", "train", "predict", "eval"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_file, "key=value config file");
    for (const auto& key : config_keys()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (key == "emit_draws" || key == "deterministic") {
        sub->add_flag_callback(flag, [&flags, key] { flags[key] = "true"; });
      } else {
        sub->add_option_function<std::string>(
               flag, [&flags, key](const std::string& v) { flags[key] = v; })
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
    commands.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!config_file.empty()) apply_overrides(cfg, read_config_file(config_file));
    apply_overrides(cfg, env_overrides(env ? env : EnvLookup([](const char* n) { return std::getenv(n); })));
    apply_overrides(cfg, flags);
    cfg.validate();
    if (commands[0]->parsed()) cmd_synth(cfg, out);
    if (commands[1]->parsed()) cmd_train(cfg, out);
    if (commands[2]->parsed()) cmd_predict(cfg, out);
    if (commands[3]->parsed()) cmd_eval(cfg, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace imm::cli
