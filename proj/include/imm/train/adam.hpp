#pragma once

#include <cstddef>
#include <vector>

#include "imm/model/params.hpp"

namespace imm::train {

struct AdamOptions {
  double lr = 2e-4;
  double beta_a = 0.0;  // first-moment decay
  double beta_b = 0.9;  // second-moment decay
  double eps = 1e-8;
};

/// First/second moments per parameter tensor plus the step counter.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update using the gradients stored on the
/// parameters. Throws StructuralError if a parameter has no gradient buffer.
void adam_step(model::ParameterStore& params, AdamState& state, const AdamOptions& options);

/// Global L2 norm of all parameter gradients.
double gradient_norm(const model::ParameterStore& params);

/// Rescales gradients so their global norm is at most max_norm; returns the
/// norm before clipping.
double clip_gradients(model::ParameterStore& params, double max_norm);

}  // namespace imm::train
