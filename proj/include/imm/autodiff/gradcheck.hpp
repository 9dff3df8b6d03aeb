#pragma once

#include <functional>
#include <span>

#include "imm/autodiff/tape.hpp"

namespace imm::ad {

struct GradCheckResult {
  double max_abs_error = 0.0;
  /// Largest gradient magnitude seen on either route.
  double max_abs_grad = 0.0;
  /// max_abs_error / max_abs_grad (0 when both gradients vanish).
  double relative_error = 0.0;
  std::size_t entries = 0;
};

using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `build(tape)` w.r.t. `params` against
/// central differences with step h. The builder must obtain the parameters
/// through tape.parameter() and be deterministic (fixed dropout seeds).
/// Existing gradients on `params` are cleared.
GradCheckResult check_gradients(std::span<Tensor* const> params, const LossBuilder& build,
                                double h = 1e-5);

/// Central-difference gradient of the scalar loss w.r.t. one tensor.
std::vector<double> numeric_gradient(Tensor& param, const LossBuilder& build, double h = 1e-5);

}  // namespace imm::ad
