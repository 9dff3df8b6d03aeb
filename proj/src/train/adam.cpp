#include "imm/train/adam.hpp"

#include <cmath>

#include "imm/error.hpp"

namespace imm::train {

void adam_step(model::ParameterStore& params, AdamState& state, const AdamOptions& o) {
  auto& entries = params.entries();
  if (state.m.empty()) {
    for (const auto& e : entries) {
      state.m.emplace_back(e.tensor.size(), 0.0);
      state.v.emplace_back(e.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != entries.size()) {
    throw StructuralError("optimizer state does not match the parameter registry");
  }
  for (const auto& e : entries) {
    if (!e.tensor.has_grad()) throw StructuralError("parameter '" + e.name + "' has no gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct_a = 1.0 - std::pow(o.beta_a, t);
  const double correct_b = 1.0 - std::pow(o.beta_b, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto values = entries[p].tensor.values();
    auto grad = entries[p].tensor.grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = o.beta_a * m[i] + (1.0 - o.beta_a) * grad[i];
      v[i] = o.beta_b * v[i] + (1.0 - o.beta_b) * grad[i] * grad[i];
      const double m_hat = m[i] / correct_a;
      const double v_hat = v[i] / correct_b;
      values[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

double gradient_norm(const model::ParameterStore& params) {
  double total = 0.0;
  for (const auto& e : params.entries()) {
    for (double g : e.tensor.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_gradients(model::ParameterStore& params, double max_norm) {
  const double norm = gradient_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& e : params.entries()) {
      for (double& g : e.tensor.grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace imm::train
