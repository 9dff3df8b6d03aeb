#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imm/autodiff/ops.hpp"
#include "imm/data/window_sample.hpp"
#include "imm/dist/distribution.hpp"
#include "imm/model/config.hpp"
#include "imm/model/params.hpp"

namespace imm::model {

/// Weights of one attention head.
struct HeadWeights {
  ad::Var wq, wk, wv;
};

/// Scaled dot-product attention softmax(Q K^T / sqrt(d_k)) V with queries
/// taken from `queries` and keys/values from `memory`. The score matrix is
/// formed as K Q^T so the softmax normalizes each query's column. With
/// groups > 1, queries and memory hold that many stacked sequences and each
/// attends only within its own block.
ad::Var attention(ad::Var queries, ad::Var memory, const HeadWeights& head,
                  std::size_t groups = 1);

/// Concatenated heads projected by wo (heads * d_v x d).
ad::Var multi_head(ad::Var queries, ad::Var memory, std::span<const HeadWeights> heads,
                   ad::Var wo, std::size_t groups = 1);

/// maxpool1d(elu(conv1d(x) + bias)): halves the sequence length.
ad::Var conv_distill(ad::Var x, ad::Var kernel, ad::Var bias, std::size_t groups = 1);

/// Stochastic encoder-decoder attention forecaster.
///
/// Every forward pass draws fresh dropout masks from the supplied seed; the
/// k outputs of repeated passes are the mixture components of the
/// predictive distribution. Passing dropout off gives the deterministic
/// network.
class Transformer {
 public:
  /// Fresh model with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights.
  Transformer(ModelConfig config, std::uint64_t init_seed);
  /// Model over existing parameters; throws LookupError/DimensionError if
  /// names or shapes do not match the configuration.
  Transformer(ModelConfig config, ParameterStore params);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  /// Encoder input: subject token followed by value + time + positional
  /// embeddings, (enc_len + 1) x d. Throws LookupError on an unknown subject.
  ad::Var embed(ad::Tape& tape, std::span<const double> x, std::span<const double> time_feat,
                std::size_t subject) const;

  /// Encoder output for a window. rng == nullptr disables dropout.
  ad::Var encode(ad::Tape& tape, const data::WindowSample& window, Rng* rng) const;
  /// Encoder outputs of rngs.size() dropout draws stacked by rows; an empty
  /// span gives the single deterministic pass.
  ad::Var encode(ad::Tape& tape, const data::WindowSample& window, std::span<Rng> rngs) const;

  /// Full pass returning the pred_len x 2 head (mean, log-scale).
  ad::Var forward(ad::Tape& tape, const data::WindowSample& window, Rng* rng) const;
  /// One pass per generator, stacked: rows [j * pred_len, (j + 1) * pred_len)
  /// equal forward(tape, window, &rngs[j]) bit for bit.
  ad::Var forward(ad::Tape& tape, const data::WindowSample& window, std::span<Rng> rngs) const;

  /// One pass with dropout masks drawn from `seed` (dropout on) or the
  /// deterministic network (stochastic = false).
  dist::SufficientStats stochastic_forward(const data::WindowSample& window, std::uint64_t seed,
                                           bool stochastic = true) const;

  /// k passes with per-draw seeds derived from (seed, draw index).
  dist::MixtureSample predict_distribution(const data::WindowSample& window, std::size_t k,
                                           std::uint64_t seed, bool stochastic = true) const;

  /// Throws DimensionError when the window does not fit the configuration.
  void check_window(const data::WindowSample& window) const;

 private:
  ad::Var parameter(ad::Tape& tape, const std::string& name) const;
  std::vector<HeadWeights> heads(ad::Tape& tape, const std::string& prefix) const;
  // Residual wrapper around f, placing the norm according to config_.norm_first.
  template <class F>
  ad::Var sublayer(ad::Tape& tape, ad::Var x, const std::string& norm, std::span<Rng> rngs,
                   F&& f) const;
  ad::Var norm(ad::Tape& tape, ad::Var x, const std::string& prefix) const;
  ad::Var feed_forward(ad::Tape& tape, ad::Var x, const std::string& prefix) const;
  ad::Var decoder_input(ad::Tape& tape, const data::WindowSample& window) const;
  void initialize(std::uint64_t seed);
  void validate_params() const;

  ModelConfig config_;
  // Tape leaves bind non-const tensors; forward passes never write them.
  mutable ParameterStore params_;
  ad::Tensor enc_positional_;
  ad::Tensor dec_positional_;
};

/// Registry layout (name -> shape) for a configuration, in creation order.
std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const ModelConfig& config);

}  // namespace imm::model
