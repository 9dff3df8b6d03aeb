#include "imm/train/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "imm/autodiff/ops.hpp"
#include "imm/error.hpp"

namespace imm::train {
namespace {

void check_head(ad::Var head, std::span<const double> y) {
  const ad::Tensor& h = head.value();
  if (h.rank() != 2 || h.cols() != 2 || h.rows() != y.size()) {
    throw DimensionError("head " + ad::shape_string(h.shape()) + " does not match " +
                         std::to_string(y.size()) + " targets");
  }
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept { return kind == LossKind::Imm ? "imm" : "mse"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "imm") return LossKind::Imm;
  if (name == "mse") return LossKind::Mse;
  throw ParameterError("unknown loss '" + std::string(name) + "'");
}

ad::Var draw_log_likelihood(ad::Var head, std::span<const double> y, dist::BaseKind kind) {
  check_head(head, y);
  const ad::Tensor& h = head.value();
  const std::size_t t = y.size();
  std::vector<double> d_mean(t), d_scale(t);
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    const auto p = dist::base_log_pdf_partials(kind, y[i], h(i, 0), h(i, 1));
    total += dist::base_log_pdf(kind, y[i], h(i, 0), h(i, 1));
    d_mean[i] = p.d_mean;
    d_scale[i] = p.d_log_scale;
  }
  const auto ih = head.id();
  return head.tape()->push(
      ad::Tensor::scalar(total),
      [ih, d_mean = std::move(d_mean), d_scale = std::move(d_scale)](ad::Tape& tape,
                                                                     std::uint32_t self) {
        const double g = tape.incoming(self)[0];
        auto dh = tape.grad_buffer(ih);
        for (std::size_t i = 0; i < d_mean.size(); ++i) {
          dh[2 * i] += g * d_mean[i];
          dh[2 * i + 1] += g * d_scale[i];
        }
      });
}

ad::Var imm_nll(std::span<const ad::Var> heads, std::span<const double> y, dist::BaseKind kind) {
  if (heads.empty()) throw DomainError("imm_nll needs at least one draw");
  std::vector<ad::Var> per_draw;
  per_draw.reserve(heads.size());
  for (const ad::Var& h : heads) per_draw.push_back(draw_log_likelihood(h, y, kind));
  ad::Tape& tape = *heads.front().tape();
  const ad::Var lse = ad::logsumexp(ad::concat_rows(per_draw));
  const ad::Var log_k = tape.constant(ad::Tensor::scalar(std::log(static_cast<double>(heads.size()))));
  return ad::sub(log_k, lse);
}

double imm_nll(const dist::MixtureSample& sample, std::span<const double> y, dist::BaseKind kind) {
  return -dist::mixture_log_pdf(kind, sample, y);
}

ad::Var mse_loss(ad::Var head, std::span<const double> y) {
  check_head(head, y);
  const ad::Tensor& h = head.value();
  const std::size_t t = y.size();
  std::vector<double> resid(t);
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    resid[i] = h(i, 0) - y[i];
    total += resid[i] * resid[i];
  }
  const auto ih = head.id();
  return head.tape()->push(ad::Tensor::scalar(total / static_cast<double>(t)),
                           [ih, resid = std::move(resid)](ad::Tape& tape, std::uint32_t self) {
                             const double g = tape.incoming(self)[0];
                             const double factor = 2.0 / static_cast<double>(resid.size());
                             auto dh = tape.grad_buffer(ih);
                             for (std::size_t i = 0; i < resid.size(); ++i) {
                               dh[2 * i] += g * factor * resid[i];
                             }
                           });
}

double mse_loss(std::span<const double> mean, std::span<const double> y) {
  if (mean.size() != y.size() || y.empty()) throw DimensionError("mse_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - mean[i]) * (y[i] - mean[i]);
  return total / static_cast<double>(y.size());
}

}  // namespace imm::train
