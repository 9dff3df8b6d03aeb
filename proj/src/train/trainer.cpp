#include "imm/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "imm/error.hpp"
#include "imm/random.hpp"

namespace imm::train {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kDropoutStream = 0x44524f50ULL;
constexpr std::uint64_t kValidationStream = 0x56414cULL;

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (loss == LossKind::Imm && k_train < 2) throw ConfigError("k_train must be >= 2 for the IMM loss");
  if (k_train == 0) throw ConfigError("k_train must be positive");
  if (k_eval == 0) throw ConfigError("k_eval must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(beta_a >= 0.0 && beta_a < 1.0)) throw ConfigError("beta_a must lie in [0, 1)");
  if (!(beta_b >= 0.0 && beta_b < 1.0)) throw ConfigError("beta_b must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

double validation_nll(const model::Transformer& model, std::span<const data::WindowSample> val,
                      const TrainConfig& cfg) {
  if (val.empty()) throw DomainError("validation set is empty");
  const auto kind = model.config().base;
  const std::uint64_t base = derive_seed(cfg.seed, kValidationStream);
  if (cfg.loss == LossKind::Imm) {
    double total = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const auto sample = model.predict_distribution(val[i], cfg.k_eval, derive_seed(base, i));
      total += imm_nll(sample, val[i].y, kind);
    }
    return total / static_cast<double>(val.size());
  }
  std::vector<std::vector<double>> residuals;
  residuals.reserve(val.size());
  for (const auto& w : val) {
    const auto stats = model.stochastic_forward(w, 0, false);
    std::vector<double> r(w.y.size());
    for (std::size_t h = 0; h < r.size(); ++h) r[h] = w.y[h] - stats.mean[h];
    residuals.push_back(std::move(r));
  }
  const double var = std::max(dist::gaussian_mle_variance(residuals), 1e-12);
  return -dist::gaussian_avg_loglik(var, val.front().y.size());
}

TrainResult train(model::Transformer& model, std::span<const data::WindowSample> train_set,
                  std::span<const data::WindowSample> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  for (const auto& w : train_set) model.check_window(w);
  for (const auto& w : val_set) model.check_window(w);

  TrainResult result;
  result.best_params = model.params();
  if (cfg.epochs == 0) return result;
  if (train_set.empty()) throw DomainError("training set is empty");

  auto& params = model.params();
  const auto kind = model.config().base;
  const AdamOptions adam = cfg.adam();
  AdamState state;
  double best = val_set.empty() ? INFINITY : validation_nll(model, val_set, cfg);
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::vector<Rng> rngs;
  rngs.reserve(cfg.k_train);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, kShuffleStream, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    const std::uint64_t epoch_seed = derive_seed(cfg.seed, kDropoutStream, epoch);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      params.zero_grads();
      for (std::size_t pos = start; pos < end; ++pos) {
        const auto& w = train_set[order[pos]];
        const std::uint64_t window_seed = derive_seed(epoch_seed, pos);
        ad::Tape tape;
        ad::Var loss;
        if (cfg.loss == LossKind::Imm) {
          rngs.clear();
          for (std::size_t j = 0; j < cfg.k_train; ++j) rngs.emplace_back(derive_seed(window_seed, j));
          const ad::Var stacked = model.forward(tape, w, rngs);
          const std::size_t t = w.y.size();
          std::vector<ad::Var> heads;
          heads.reserve(cfg.k_train);
          for (std::size_t j = 0; j < cfg.k_train; ++j) {
            heads.push_back(ad::slice_rows(stacked, j * t, t));
          }
          loss = imm_nll(heads, w.y, kind);
        } else {
          Rng rng(window_seed);
          loss = mse_loss(model.forward(tape, w, &rng), w.y);
        }
        const double value = loss.value()[0];
        if (!std::isfinite(value)) {
          throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
        }
        epoch_loss += value;
        tape.backward(loss, inv_b);
      }
      clip_gradients(params, cfg.clip_norm);
      adam_step(params, state, adam);
      if (!params.all_finite()) {
        throw NumericError("non-finite parameters after epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_nll = val_set.empty() ? rec.train_loss : validation_nll(model, val_set, cfg);
    if (cfg.log_wall_time) {
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_nll < best) {
      best = rec.val_nll;
      result.best_params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.patience > 0) {
      result.stopped_early = true;
      break;
    }
  }
  for (auto& e : result.best_params.entries()) e.tensor.drop_grad();
  params = result.best_params;
  return result;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochRecord> log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_nll,wall_seconds\n";
  char line[160];
  for (const auto& r : log) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.6f\n", r.epoch, r.train_loss, r.val_nll,
                  r.wall_seconds);
    out << line;
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<EpochRecord> read_training_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_nll,wall_seconds") throw DataError("bad training log header");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    char c1, c2, c3;
    std::istringstream ss(line);
    if (!(ss >> r.epoch >> c1 >> r.train_loss >> c2 >> r.val_nll >> c3 >> r.wall_seconds)) {
      throw DataError("bad training log row: " + line);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace imm::train
