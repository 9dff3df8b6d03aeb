#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "imm/dist/distribution.hpp"

namespace imm::model {

/// Architecture hyper-parameters. Defaults are the desk-scale setting; the
/// large setting (d = 512, 12 heads, feed-forward 2048) is expressible too.
struct ModelConfig {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t d_k = 8;
  std::size_t d_v = 8;
  std::size_t enc_blocks = 2;
  std::size_t dec_blocks = 1;
  std::size_t ff_width = 64;
  double dropout = 0.3;
  std::size_t enc_len = 4;
  std::size_t pred_len = 2;
  std::size_t time_features = 0;
  std::size_t subjects = 1;
  dist::BaseKind base = dist::BaseKind::Gaussian;
  /// Pre-LN sublayers x + dropout(f(LN(x))) with a final norm after the
  /// encoder and decoder stacks. False gives post-LN, LN(x + dropout(f(x))).
  bool norm_first = false;

  /// Throws ParameterError when an invariant is violated (positive sizes
  /// and lengths, 0 <= dropout < 1). The output projection maps heads * d_v
  /// back to d_model, so d_model need not be a multiple of heads.
  void validate() const;

  /// Number of trailing encoder values fed to the decoder as a start token.
  std::size_t start_len() const noexcept { return (enc_len + 3) / 4; }

  /// Encoder sequence length after all blocks (subject token included).
  std::size_t encoder_output_len() const noexcept;

  std::map<std::string, std::string> to_map() const;
  /// Inverse of to_map(); unknown keys are ignored, missing keys keep defaults.
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace imm::model
