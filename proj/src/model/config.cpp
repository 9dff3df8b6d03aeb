#include "imm/model/config.hpp"

#include <cstdio>
#include <string>

#include "imm/error.hpp"

namespace imm::model {

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ParameterError("model config: " + what);
  };
  require(d_model > 0 && heads > 0 && d_k > 0 && d_v > 0, "dimensions must be positive");
  require(enc_blocks >= 1 && dec_blocks >= 1, "need at least one encoder and decoder block");
  require(ff_width > 0, "ff_width must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(enc_len >= 1 && pred_len >= 1, "enc_len and pred_len must be positive");
  require(subjects >= 1, "need at least one subject row");
}

std::size_t ModelConfig::encoder_output_len() const noexcept {
  std::size_t len = enc_len + 1;
  for (std::size_t b = 1; b < enc_blocks; ++b) len = (len + 1) / 2;
  return len;
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  auto num = [](auto v) { return std::to_string(v); };
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", dropout);
  return {
      {"d_model", num(d_model)},
      {"heads", num(heads)},
      {"d_k", num(d_k)},
      {"d_v", num(d_v)},
      {"enc_blocks", num(enc_blocks)},
      {"dec_blocks", num(dec_blocks)},
      {"ff_width", num(ff_width)},
      {"dropout", buf},
      {"enc_len", num(enc_len)},
      {"pred_len", num(pred_len)},
      {"time_features", num(time_features)},
      {"subjects", num(subjects)},
      {"base", std::string(dist::to_string(base))},
      {"norm_first", norm_first ? "true" : "false"},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto size = [&](const char* key, std::size_t& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stoull(it->second);
  };
  size("d_model", c.d_model);
  size("heads", c.heads);
  size("d_k", c.d_k);
  size("d_v", c.d_v);
  size("enc_blocks", c.enc_blocks);
  size("dec_blocks", c.dec_blocks);
  size("ff_width", c.ff_width);
  size("enc_len", c.enc_len);
  size("pred_len", c.pred_len);
  size("time_features", c.time_features);
  size("subjects", c.subjects);
  if (auto it = kv.find("dropout"); it != kv.end()) c.dropout = std::stod(it->second);
  if (auto it = kv.find("base"); it != kv.end()) c.base = dist::parse_base_kind(it->second);
  if (auto it = kv.find("norm_first"); it != kv.end()) {
    if (it->second != "true" && it->second != "false") {
      throw ParameterError("model config: norm_first must be true or false");
    }
    c.norm_first = it->second == "true";
  }
  return c;
}

}  // namespace imm::model
