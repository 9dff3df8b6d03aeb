#include "imm/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace imm::ad {
namespace {

double evaluate(const LossBuilder& build) {
  Tape tape(false);
  return build(tape).value()[0];
}

}  // namespace

std::vector<double> numeric_gradient(Tensor& param, const LossBuilder& build, double h) {
  std::vector<double> grad(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + h;
    const double up = evaluate(build);
    param[i] = saved - h;
    const double down = evaluate(build);
    param[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

GradCheckResult check_gradients(std::span<Tensor* const> params, const LossBuilder& build,
                                double h) {
  for (Tensor* p : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  GradCheckResult result;
  for (Tensor* p : params) {
    const std::vector<double> numeric = numeric_gradient(*p, build, h);
    const auto analytic = p->grad();
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic[i] - numeric[i]));
      result.max_abs_grad =
          std::max({result.max_abs_grad, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    result.entries += numeric.size();
  }
  result.relative_error =
      result.max_abs_grad > 0.0 ? result.max_abs_error / result.max_abs_grad : 0.0;
  return result;
}

}  // namespace imm::ad
