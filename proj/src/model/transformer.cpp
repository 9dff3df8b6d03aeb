#include "imm/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imm/error.hpp"
#include "imm/model/positional.hpp"

namespace imm::model {
namespace {

/// Runs one layer and reports non-finite values (or the NaN guard of the
/// softmax) as a NumericError naming the layer.
template <class F>
ad::Var guarded(const std::string& layer, F&& build) {
  try {
    return ad::check_finite(build(), layer);
  } catch (const InvalidValueError& e) {
    throw NumericError(layer + ": " + e.what());
  }
}


enum class Init { Uniform, Ones, Zeros, HeadBias };

struct LayoutEntry {
  std::string name;
  ad::Shape shape;
  std::size_t fan_in;
  Init init;
};

void add_attention(std::vector<LayoutEntry>& out, const ModelConfig& c, const std::string& prefix) {
  const std::size_t d = c.d_model;
  for (std::size_t i = 0; i < c.heads; ++i) {
    const std::string head = prefix + ".head" + std::to_string(i);
    out.push_back({head + ".wq", {d, c.d_k}, d, Init::Uniform});
    out.push_back({head + ".wk", {d, c.d_k}, d, Init::Uniform});
    out.push_back({head + ".wv", {d, c.d_v}, d, Init::Uniform});
  }
  out.push_back({prefix + ".wo", {c.heads * c.d_v, d}, c.heads * c.d_v, Init::Uniform});
}

void add_norm(std::vector<LayoutEntry>& out, std::size_t d, const std::string& prefix) {
  out.push_back({prefix + ".gamma", {d}, d, Init::Ones});
  out.push_back({prefix + ".beta", {d}, d, Init::Zeros});
}

void add_feed_forward(std::vector<LayoutEntry>& out, const ModelConfig& c,
                      const std::string& prefix) {
  const std::size_t d = c.d_model, f = c.ff_width;
  out.push_back({prefix + ".w1", {d, f}, d, Init::Uniform});
  out.push_back({prefix + ".b1", {f}, d, Init::Uniform});
  out.push_back({prefix + ".w2", {f, d}, f, Init::Uniform});
  out.push_back({prefix + ".b2", {d}, f, Init::Uniform});
}

std::vector<LayoutEntry> layout(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<LayoutEntry> out;
  out.push_back({"embed.value", {1, d}, 1, Init::Uniform});
  if (c.time_features > 0) {
    out.push_back({"embed.time", {c.time_features, d}, c.time_features, Init::Uniform});
  }
  out.push_back({"embed.subject", {c.subjects, d}, 1, Init::Uniform});
  for (std::size_t b = 0; b < c.enc_blocks; ++b) {
    const std::string p = "enc" + std::to_string(b);
    add_attention(out, c, p + ".attn");
    add_norm(out, d, p + ".ln1");
    add_feed_forward(out, c, p + ".ff");
    add_norm(out, d, p + ".ln2");
    if (b + 1 < c.enc_blocks) {
      out.push_back({"distill" + std::to_string(b) + ".kernel", {3, d, d}, 3 * d, Init::Uniform});
      out.push_back({"distill" + std::to_string(b) + ".bias", {d}, 3 * d, Init::Uniform});
    }
  }
  for (std::size_t b = 0; b < c.dec_blocks; ++b) {
    const std::string p = "dec" + std::to_string(b);
    add_attention(out, c, p + ".self");
    add_norm(out, d, p + ".ln1");
    add_attention(out, c, p + ".cross");
    add_norm(out, d, p + ".ln2");
    add_feed_forward(out, c, p + ".ff");
    add_norm(out, d, p + ".ln3");
  }
  if (c.norm_first) {
    add_norm(out, d, "enc.norm");
    add_norm(out, d, "dec.norm");
  }
  out.push_back({"head.w", {d, 2}, d, Init::Uniform});
  out.push_back({"head.b", {2}, d, Init::HeadBias});
  return out;
}

ad::Tensor rows_of(const ad::Tensor& table, std::size_t begin, std::size_t count) {
  const std::size_t n = table.cols();
  return ad::Tensor({count, n}, std::vector<double>(table.data() + begin * n,
                                                   table.data() + (begin + count) * n));
}

}  // namespace

std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const ModelConfig& config) {
  std::vector<std::pair<std::string, ad::Shape>> out;
  for (auto& e : layout(config)) out.emplace_back(e.name, e.shape);
  return out;
}

ad::Var attention(ad::Var queries, ad::Var memory, const HeadWeights& head, std::size_t groups) {
  const ad::Var q = ad::matmul(queries, head.wq);
  const ad::Var k = ad::matmul(memory, head.wk);
  const ad::Var v = ad::matmul(memory, head.wv);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  // keys x queries; column j holds the attention weights of query j.
  const ad::Var weights =
      ad::softmax_columns(ad::scale(ad::matmul_nt(k, q, groups), inv_sqrt_dk), groups);
  return ad::matmul_tn(weights, v, groups);
}

ad::Var multi_head(ad::Var queries, ad::Var memory, std::span<const HeadWeights> heads,
                   ad::Var wo, std::size_t groups) {
  std::vector<ad::Var> outputs;
  outputs.reserve(heads.size());
  for (const auto& h : heads) outputs.push_back(attention(queries, memory, h, groups));
  const ad::Var joined = outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
  return ad::matmul(joined, wo);
}

ad::Var conv_distill(ad::Var x, ad::Var kernel, ad::Var bias, std::size_t groups) {
  return ad::maxpool1d(ad::elu(ad::add_row(ad::conv1d(x, kernel, groups), bias)), groups);
}

Transformer::Transformer(ModelConfig config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  initialize(init_seed);
  enc_positional_ = rows_of(positional_table(config_.enc_len + 1, config_.d_model), 1,
                            config_.enc_len);
  const std::size_t dec_len = config_.start_len() + config_.pred_len;
  dec_positional_ = rows_of(positional_table(dec_len + 1, config_.d_model), 1, dec_len);
}

Transformer::Transformer(ModelConfig config, ParameterStore params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  validate_params();
  enc_positional_ = rows_of(positional_table(config_.enc_len + 1, config_.d_model), 1,
                            config_.enc_len);
  const std::size_t dec_len = config_.start_len() + config_.pred_len;
  dec_positional_ = rows_of(positional_table(dec_len + 1, config_.d_model), 1, dec_len);
}

void Transformer::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& e : layout(config_)) {
    ad::Tensor t(e.shape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(e.fan_in));
    switch (e.init) {
      case Init::Uniform:
        for (double& v : t.values()) v = rng.uniform(-bound, bound);
        break;
      case Init::Ones:
        for (double& v : t.values()) v = 1.0;
        break;
      case Init::Zeros:
        break;
      case Init::HeadBias:
        t[0] = rng.uniform(-bound, bound);
        t[1] = 0.0;
        break;
    }
    params_.add(e.name, std::move(t));
  }
}

void Transformer::validate_params() const {
  const auto expected = layout(config_);
  if (expected.size() != params_.size()) {
    throw DimensionError("parameter count " + std::to_string(params_.size()) +
                         " does not match configuration (" + std::to_string(expected.size()) +
                         ")");
  }
  for (const auto& e : expected) {
    const ad::Tensor& t = params_.get(e.name);
    if (t.shape() != e.shape) {
      throw DimensionError("parameter '" + e.name + "' has shape " + ad::shape_string(t.shape()) +
                           ", expected " + ad::shape_string(e.shape));
    }
  }
}

ad::Var Transformer::parameter(ad::Tape& tape, const std::string& name) const {
  return tape.parameter(params_.get(name));
}

std::vector<HeadWeights> Transformer::heads(ad::Tape& tape, const std::string& prefix) const {
  std::vector<HeadWeights> out;
  out.reserve(config_.heads);
  for (std::size_t i = 0; i < config_.heads; ++i) {
    const std::string head = prefix + ".head" + std::to_string(i);
    out.push_back({parameter(tape, head + ".wq"), parameter(tape, head + ".wk"),
                   parameter(tape, head + ".wv")});
  }
  return out;
}

ad::Var Transformer::norm(ad::Tape& tape, ad::Var x, const std::string& prefix) const {
  return ad::layer_norm(x, parameter(tape, prefix + ".gamma"), parameter(tape, prefix + ".beta"));
}

template <class F>
ad::Var Transformer::sublayer(ad::Tape& tape, ad::Var x, const std::string& norm_name,
                              std::span<Rng> rngs, F&& f) const {
  ad::Var update = f(config_.norm_first ? norm(tape, x, norm_name) : x);
  if (!rngs.empty()) update = ad::dropout(update, config_.dropout, rngs);
  const ad::Var sum = ad::add(x, update);
  return config_.norm_first ? sum : norm(tape, sum, norm_name);
}

ad::Var Transformer::feed_forward(ad::Tape& tape, ad::Var x, const std::string& prefix) const {
  const ad::Var hidden =
      ad::elu(ad::linear(x, parameter(tape, prefix + ".w1"), parameter(tape, prefix + ".b1")));
  return ad::linear(hidden, parameter(tape, prefix + ".w2"), parameter(tape, prefix + ".b2"));
}

void Transformer::check_window(const data::WindowSample& w) const {
  const std::size_t dt = config_.time_features;
  if (w.x.size() != config_.enc_len) {
    throw DimensionError("window has " + std::to_string(w.x.size()) + " encoder values, model expects " +
                         std::to_string(config_.enc_len));
  }
  if (!w.y.empty() && w.y.size() != config_.pred_len) {
    throw DimensionError("window has " + std::to_string(w.y.size()) + " targets, model expects " +
                         std::to_string(config_.pred_len));
  }
  if (w.time_features != dt || w.time_feat.size() != config_.enc_len * dt ||
      w.future_time_feat.size() != config_.pred_len * dt) {
    throw DimensionError("window time features do not match the model (" + std::to_string(dt) +
                         " per step)");
  }
  if (w.subject >= config_.subjects) {
    throw LookupError("subject index " + std::to_string(w.subject) + " outside table of " +
                      std::to_string(config_.subjects));
  }
}

ad::Var Transformer::embed(ad::Tape& tape, std::span<const double> x,
                           std::span<const double> time_feat, std::size_t subject) const {
  if (subject >= config_.subjects) {
    throw LookupError("unknown subject index " + std::to_string(subject));
  }
  const std::size_t t = x.size();
  if (t != config_.enc_len) {
    throw DimensionError("embedding expects " + std::to_string(config_.enc_len) + " values, got " +
                         std::to_string(t));
  }
  const ad::Tensor& pos = enc_positional_;
  ad::Var values = ad::matmul(tape.constant(ad::Tensor::column(x)), parameter(tape, "embed.value"));
  if (config_.time_features > 0) {
    ad::Tensor tf({t, config_.time_features},
                  std::vector<double>(time_feat.begin(), time_feat.end()));
    values = ad::add(values, ad::matmul(tape.constant(std::move(tf)), parameter(tape, "embed.time")));
  }
  values = ad::add(values, tape.constant(pos));
  const std::size_t row = subject;
  const ad::Var subject_row = ad::gather_rows(parameter(tape, "embed.subject"), {&row, 1});
  const ad::Var parts[] = {subject_row, values};
  return ad::concat_rows(parts);
}

ad::Var Transformer::encode(ad::Tape& tape, const data::WindowSample& window, Rng* rng) const {
  if (rng == nullptr) return encode(tape, window, std::span<Rng>{});
  return encode(tape, window, std::span<Rng>(rng, 1));
}

ad::Var Transformer::encode(ad::Tape& tape, const data::WindowSample& window,
                            std::span<Rng> rngs) const {
  check_window(window);
  const std::size_t groups = std::max<std::size_t>(rngs.size(), 1);
  ad::Var h = guarded("embedding", [&] {
    return embed(tape, window.x, window.time_feat, window.subject);
  });
  h = ad::tile_rows(h, groups);
  if (!rngs.empty()) h = ad::dropout(h, config_.dropout, rngs);
  for (std::size_t b = 0; b < config_.enc_blocks; ++b) {
    const std::string p = "enc" + std::to_string(b);
    h = guarded("encoder block " + std::to_string(b), [&] {
      const auto hw = heads(tape, p + ".attn");
      const ad::Var x = sublayer(tape, h, p + ".ln1", rngs, [&](ad::Var u) {
        return multi_head(u, u, hw, parameter(tape, p + ".attn.wo"), groups);
      });
      return sublayer(tape, x, p + ".ln2", rngs,
                      [&](ad::Var u) { return feed_forward(tape, u, p + ".ff"); });
    });
    if (b + 1 < config_.enc_blocks) {
      const std::string dp = "distill" + std::to_string(b);
      h = guarded("distillation layer " + std::to_string(b), [&] {
        return conv_distill(h, parameter(tape, dp + ".kernel"), parameter(tape, dp + ".bias"),
                            groups);
      });
    }
  }
  return config_.norm_first ? norm(tape, h, "enc.norm") : h;
}

ad::Var Transformer::decoder_input(ad::Tape& tape, const data::WindowSample& window) const {
  const std::size_t start = config_.start_len();
  const std::size_t len = start + config_.pred_len;
  const std::size_t dt = config_.time_features;
  std::vector<double> values(len, 0.0);
  std::copy(window.x.end() - static_cast<std::ptrdiff_t>(start), window.x.end(), values.begin());
  const ad::Var value_emb =
      ad::matmul(tape.constant(ad::Tensor::column(values)), parameter(tape, "embed.value"));
  ad::Var emb = value_emb;
  if (dt > 0) {
    std::vector<double> tf;
    tf.reserve(len * dt);
    tf.insert(tf.end(), window.time_feat.end() - static_cast<std::ptrdiff_t>(start * dt),
              window.time_feat.end());
    tf.insert(tf.end(), window.future_time_feat.begin(), window.future_time_feat.end());
    emb = ad::add(emb, ad::matmul(tape.constant(ad::Tensor({len, dt}, std::move(tf))),
                                  parameter(tape, "embed.time")));
  }
  return ad::add(emb, tape.constant(dec_positional_));
}

ad::Var Transformer::forward(ad::Tape& tape, const data::WindowSample& window, Rng* rng) const {
  if (rng == nullptr) return forward(tape, window, std::span<Rng>{});
  return forward(tape, window, std::span<Rng>(rng, 1));
}

ad::Var Transformer::forward(ad::Tape& tape, const data::WindowSample& window,
                             std::span<Rng> rngs) const {
  const std::size_t groups = std::max<std::size_t>(rngs.size(), 1);
  const ad::Var memory = encode(tape, window, rngs);
  ad::Var h = ad::tile_rows(decoder_input(tape, window), groups);
  if (!rngs.empty()) h = ad::dropout(h, config_.dropout, rngs);
  for (std::size_t b = 0; b < config_.dec_blocks; ++b) {
    const std::string p = "dec" + std::to_string(b);
    h = guarded("decoder block " + std::to_string(b), [&] {
      const auto self_heads = heads(tape, p + ".self");
      ad::Var x = sublayer(tape, h, p + ".ln1", rngs, [&](ad::Var u) {
        return multi_head(u, u, self_heads, parameter(tape, p + ".self.wo"), groups);
      });
      const auto cross_heads = heads(tape, p + ".cross");
      x = sublayer(tape, x, p + ".ln2", rngs, [&](ad::Var u) {
        return multi_head(u, memory, cross_heads, parameter(tape, p + ".cross.wo"), groups);
      });
      return sublayer(tape, x, p + ".ln3", rngs,
                      [&](ad::Var u) { return feed_forward(tape, u, p + ".ff"); });
    });
  }
  if (config_.norm_first) h = norm(tape, h, "dec.norm");
  const ad::Var tail = ad::slice_rows(h, config_.start_len(), config_.pred_len, groups);
  return guarded("output head", [&] {
    return ad::linear(tail, parameter(tape, "head.w"), parameter(tape, "head.b"));
  });
}

dist::SufficientStats Transformer::stochastic_forward(const data::WindowSample& window,
                                                      std::uint64_t seed, bool stochastic) const {
  ad::Tape tape(false);
  Rng rng(seed);
  const bool use_dropout = stochastic && config_.dropout > 0.0;
  const ad::Tensor& head = forward(tape, window, use_dropout ? &rng : nullptr).value();
  dist::SufficientStats stats;
  stats.mean.resize(config_.pred_len);
  stats.log_scale.resize(config_.pred_len);
  for (std::size_t h = 0; h < config_.pred_len; ++h) {
    stats.mean[h] = head(h, 0);
    stats.log_scale[h] = head(h, 1);
  }
  return stats;
}

dist::MixtureSample Transformer::predict_distribution(const data::WindowSample& window,
                                                      std::size_t k, std::uint64_t seed,
                                                      bool stochastic) const {
  if (k == 0) throw DomainError("predict_distribution needs k >= 1");
  if (!stochastic || config_.dropout == 0.0) {
    std::vector<dist::SufficientStats> draws(k, stochastic_forward(window, seed, false));
    return dist::MixtureSample(std::move(draws));
  }
  // Draws are run in stacked chunks; each matches stochastic_forward with
  // its derived seed exactly.
  constexpr std::size_t kChunk = 50;
  const std::size_t t = config_.pred_len;
  std::vector<dist::SufficientStats> draws;
  draws.reserve(k);
  std::vector<Rng> rngs;
  for (std::size_t first = 0; first < k; first += kChunk) {
    const std::size_t count = std::min(kChunk, k - first);
    rngs.clear();
    for (std::size_t j = first; j < first + count; ++j) rngs.emplace_back(derive_seed(seed, j));
    ad::Tape tape(false);
    const ad::Tensor& head = forward(tape, window, rngs).value();
    for (std::size_t j = 0; j < count; ++j) {
      dist::SufficientStats stats;
      stats.mean.resize(t);
      stats.log_scale.resize(t);
      for (std::size_t h = 0; h < t; ++h) {
        stats.mean[h] = head(j * t + h, 0);
        stats.log_scale[h] = head(j * t + h, 1);
      }
      draws.push_back(std::move(stats));
    }
  }
  return dist::MixtureSample(std::move(draws));
}

}  // namespace imm::model
