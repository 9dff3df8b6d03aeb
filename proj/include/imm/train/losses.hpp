#pragma once

#include <span>
#include <string_view>

#include "imm/autodiff/tape.hpp"
#include "imm/dist/distribution.hpp"

namespace imm::train {

enum class LossKind { Imm, Mse };

std::string_view to_string(LossKind kind) noexcept;
/// "imm" or "mse"; throws ParameterError otherwise.
LossKind parse_loss_kind(std::string_view name);

/// sum_h log p(y_h; head(h, 0), head(h, 1)) for one pred_len x 2 head.
ad::Var draw_log_likelihood(ad::Var head, std::span<const double> y, dist::BaseKind kind);

/// Mixture negative log-likelihood over k stochastic heads, constants
/// included: log k - logsumexp_j(draw log-likelihood j).
ad::Var imm_nll(std::span<const ad::Var> heads, std::span<const double> y, dist::BaseKind kind);

/// Same quantity on plain sufficient statistics (-mixture_log_pdf).
double imm_nll(const dist::MixtureSample& sample, std::span<const double> y, dist::BaseKind kind);

/// (1/T) sum_h (y_h - head(h, 0))^2; the log-scale column gets no gradient.
ad::Var mse_loss(ad::Var head, std::span<const double> y);
double mse_loss(std::span<const double> mean, std::span<const double> y);

}  // namespace imm::train
