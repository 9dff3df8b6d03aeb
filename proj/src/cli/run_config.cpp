#include "imm/cli/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "imm/error.hpp"

namespace imm::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field size_field(std::string key, T RunConfig::*group, std::size_t T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& v) { (c.*group).*member = parse_u64(key, v); },
          [=](const RunConfig& c) { return std::to_string((c.*group).*member); }};
}

template <class T>
Field double_field(std::string key, T RunConfig::*group, double T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& v) { (c.*group).*member = parse_double(key, v); },
          [=](const RunConfig& c) { return num((c.*group).*member); }};
}

Field path_field(std::string key, std::filesystem::path RunConfig::*member) {
  return {key, [=](RunConfig& c, const std::string& v) { c.*member = v; },
          [=](const RunConfig& c) { return (c.*member).string(); }};
}

const std::vector<Field>& fields() {
  using model::ModelConfig;
  using train::TrainConfig;
  using data::SyntheticConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(path_field("out", &RunConfig::out));
    f.push_back(path_field("data", &RunConfig::data));
    f.push_back({"dataset", [](RunConfig& c, const std::string& v) { c.dataset = v; },
                 [](const RunConfig& c) { return c.dataset; }});
    f.push_back(path_field("cgm_csv", &RunConfig::cgm_csv));
    f.push_back(path_field("checkpoint", &RunConfig::checkpoint));
    f.push_back(path_field("compare", &RunConfig::compare));
    f.push_back({"split", [](RunConfig& c, const std::string& v) { c.split = v; },
                 [](const RunConfig& c) { return c.split; }});
    f.push_back({"stride", [](RunConfig& c, const std::string& v) { c.stride = parse_u64("stride", v); },
                 [](const RunConfig& c) { return std::to_string(c.stride); }});
    f.push_back({"levels", [](RunConfig& c, const std::string& v) { c.levels = parse_u64("levels", v); },
                 [](const RunConfig& c) { return std::to_string(c.levels); }});
    f.push_back({"emit_draws",
                 [](RunConfig& c, const std::string& v) { c.emit_draws = parse_bool("emit_draws", v); },
                 [](const RunConfig& c) { return std::string(c.emit_draws ? "true" : "false"); }});
    f.push_back({"deterministic",
                 [](RunConfig& c, const std::string& v) {
                   c.deterministic = parse_bool("deterministic", v);
                 },
                 [](const RunConfig& c) { return std::string(c.deterministic ? "true" : "false"); }});
    f.push_back({"svg", [](RunConfig& c, const std::string& v) { c.svg = parse_bool("svg", v); },
                 [](const RunConfig& c) { return std::string(c.svg ? "true" : "false"); }});

    f.push_back(size_field("d_model", &RunConfig::model, &ModelConfig::d_model));
    f.push_back(size_field("heads", &RunConfig::model, &ModelConfig::heads));
    f.push_back(size_field("d_k", &RunConfig::model, &ModelConfig::d_k));
    f.push_back(size_field("d_v", &RunConfig::model, &ModelConfig::d_v));
    f.push_back(size_field("enc_blocks", &RunConfig::model, &ModelConfig::enc_blocks));
    f.push_back(size_field("dec_blocks", &RunConfig::model, &ModelConfig::dec_blocks));
    f.push_back(size_field("ff_width", &RunConfig::model, &ModelConfig::ff_width));
    f.push_back(double_field("dropout", &RunConfig::model, &ModelConfig::dropout));
    f.push_back(size_field("enc_len", &RunConfig::model, &ModelConfig::enc_len));
    f.push_back(size_field("pred_len", &RunConfig::model, &ModelConfig::pred_len));
    f.push_back({"norm_first",
                 [](RunConfig& c, const std::string& v) {
                   c.model.norm_first = parse_bool("norm_first", v);
                 },
                 [](const RunConfig& c) { return std::string(c.model.norm_first ? "true" : "false"); }});
    f.push_back({"base",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.model.base = dist::parse_base_kind(v);
                   } catch (const ParameterError& e) {
                     throw ConfigError(std::string("base: ") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(dist::to_string(c.model.base)); }});

    f.push_back({"loss",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.train.loss = train::parse_loss_kind(v);
                   } catch (const ParameterError& e) {
                     throw ConfigError(std::string("loss: ") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(train::to_string(c.train.loss)); }});
    f.push_back(size_field("k_train", &RunConfig::train, &TrainConfig::k_train));
    f.push_back(size_field("k_eval", &RunConfig::train, &TrainConfig::k_eval));
    f.push_back(size_field("epochs", &RunConfig::train, &TrainConfig::epochs));
    f.push_back(size_field("batch_size", &RunConfig::train, &TrainConfig::batch_size));
    f.push_back(size_field("patience", &RunConfig::train, &TrainConfig::patience));
    f.push_back(double_field("lr", &RunConfig::train, &TrainConfig::lr));
    f.push_back(double_field("beta_a", &RunConfig::train, &TrainConfig::beta_a));
    f.push_back(double_field("beta_b", &RunConfig::train, &TrainConfig::beta_b));
    f.push_back(double_field("eps", &RunConfig::train, &TrainConfig::eps));
    f.push_back(double_field("clip_norm", &RunConfig::train, &TrainConfig::clip_norm));
    f.push_back({"log_wall_time",
                 [](RunConfig& c, const std::string& v) {
                   c.train.log_wall_time = parse_bool("log_wall_time", v);
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.log_wall_time ? "true" : "false");
                 }});

    f.push_back(size_field("n_train", &RunConfig::synth, &SyntheticConfig::n_train));
    f.push_back(size_field("n_val", &RunConfig::synth, &SyntheticConfig::n_val));
    f.push_back(size_field("n_test", &RunConfig::synth, &SyntheticConfig::n_test));
    f.push_back(double_field("grid_start", &RunConfig::synth, &SyntheticConfig::grid_start));
    f.push_back(double_field("grid_end", &RunConfig::synth, &SyntheticConfig::grid_end));
    f.push_back(double_field("grid_step", &RunConfig::synth, &SyntheticConfig::grid_step));
    f.push_back(double_field("branch_prob", &RunConfig::synth, &SyntheticConfig::branch_prob));
    f.push_back(double_field("length_scale", &RunConfig::synth, &SyntheticConfig::length_scale));
    f.push_back(double_field("amplitude", &RunConfig::synth, &SyntheticConfig::amplitude));
    f.push_back(double_field("obs_noise", &RunConfig::synth, &SyntheticConfig::obs_noise));
    f.push_back(double_field("branch_slope", &RunConfig::synth, &SyntheticConfig::branch_slope));
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset != "synthetic" && dataset != "cgm") {
    throw ConfigError("dataset must be 'synthetic' or 'cgm', got '" + dataset + "'");
  }
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("split must be train, val or test, got '" + split + "'");
  }
  if (stride == 0) throw ConfigError("stride must be positive");
  if (levels == 0) throw ConfigError("levels must be positive");
  if (out.empty()) throw ConfigError("out must be set");
  try {
    model.validate();
    synth.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  train.validate();
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out_map;
  for (const auto& f : fields()) out_map[f.key] = f.get(*this);
  return out_map;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply_overrides(RunConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(config, value);
  }
  config.train.seed = config.seed;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> env_overrides(const EnvLookup& lookup) {
  std::map<std::string, std::string> kv;
  for (const auto& key : config_keys()) {
    std::string name = "IMM_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* v = lookup(name.c_str())) kv[key] = v;
  }
  return kv;
}

void write_resolved_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : config.to_map()) out << k << '=' << v << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace imm::cli
