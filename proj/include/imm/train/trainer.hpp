#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "imm/data/window_sample.hpp"
#include "imm/model/transformer.hpp"
#include "imm/train/adam.hpp"
#include "imm/train/losses.hpp"

namespace imm::train {

struct TrainConfig {
  LossKind loss = LossKind::Imm;
  std::size_t k_train = 5;
  std::size_t k_eval = 100;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double lr = 2e-4;
  double beta_a = 0.0;
  double beta_b = 0.9;
  double eps = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  /// Record wall-clock seconds per epoch; off writes 0 so logs are
  /// byte-reproducible.
  bool log_wall_time = true;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  AdamOptions adam() const { return {lr, beta_a, beta_b, eps}; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_nll = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  model::ParameterStore best_params;
  std::vector<EpochRecord> log;
  /// 0 when no epoch improved on the initial parameters.
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean validation NLL. IMM: -mixture log-density with k_eval draws per
/// window. MSE: deterministic means scored by the Gaussian whose variance is
/// the mean squared validation residual.
double validation_nll(const model::Transformer& model, std::span<const data::WindowSample> val,
                      const TrainConfig& config);

/// Minibatch training with validation-NLL model selection and early
/// stopping. On return the model holds the best parameters, which are also
/// returned. Throws NumericError naming the epoch and batch on a non-finite
/// loss.
TrainResult train(model::Transformer& model, std::span<const data::WindowSample> train_set,
                  std::span<const data::WindowSample> val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// CSV with header epoch,train_loss,val_nll,wall_seconds.
void write_training_log(const std::filesystem::path& path, std::span<const EpochRecord> log);
std::vector<EpochRecord> read_training_log(const std::filesystem::path& path);

}  // namespace imm::train
