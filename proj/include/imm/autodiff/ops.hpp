#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "imm/autodiff/tape.hpp"
#include "imm/random.hpp"

// Differentiable primitives. Matrices are rank-2 row-major tensors; for the
// sequence ops the leading dimension is time and the trailing one features.
//
// Ops taking `groups` treat the rows as that many equal, independent
// sequences stacked on top of each other (one per dropout draw). Each block
// is computed exactly as the ungrouped op would compute it alone.

namespace imm::ad {

/// a[m x p] * b[p x n]
Var matmul(Var a, Var b);
/// a[m x p] * b[n x p]^T
Var matmul_nt(Var a, Var b);
/// a[p x m]^T * b[p x n]
Var matmul_tn(Var a, Var b);
Var transpose(Var a);

/// Block-diagonal matmul_nt: block g of a times block g of b, transposed.
/// a is (groups*m) x p, b is (groups*n) x p, result (groups*m) x n.
Var matmul_nt(Var a, Var b, std::size_t groups);
/// Block-diagonal matmul_tn: a is (groups*p) x m, b is (groups*p) x n,
/// result (groups*m) x n.
Var matmul_tn(Var a, Var b, std::size_t groups);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Adds a bias vector (1 x n or n) to every row of x[m x n].
Var add_row(Var x, Var bias);
/// x * w + b
Var linear(Var x, Var w, Var b);

/// Softmax over each column; shift-invariant (column max subtracted).
/// Throws InvalidValueError on NaN input.
Var softmax_columns(Var x, std::size_t groups = 1);

/// x if x > 0 else exp(x) - 1.
Var elu(Var x);

/// Same-padded (zero) convolution along time with kernel width 3.
/// x is t x d, kernel is 3 x d x d_out, result is t x d_out.
Var conv1d(Var x, Var kernel, std::size_t groups = 1);

/// Window-2 stride-2 max over time; an odd tail row passes through.
/// Ties route the gradient to the lower index.
Var maxpool1d(Var x, std::size_t groups = 1);

/// Row-wise layer normalization with affine gamma/beta (each 1 x d).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

/// Inverted dropout: keep with probability 1 - p and scale by 1 / (1 - p).
/// Mask draws are consumed from rng in row-major order. Throws
/// ParameterError unless 0 <= p < 1.
Var dropout(Var x, double p, Rng& rng);
/// Grouped dropout: row block g draws its mask from rngs[g], in the same
/// order as dropout(block, p, rngs[g]).
Var dropout(Var x, double p, std::span<Rng> rngs);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
/// Rows [begin, begin + count) of every block, stacked.
Var slice_rows(Var x, std::size_t begin, std::size_t count, std::size_t groups);
/// `times` copies of x stacked vertically.
Var tile_rows(Var x, std::size_t times);
/// Gathers rows of a table (e.g. an embedding matrix).
Var gather_rows(Var table, std::span<const std::size_t> rows);

Var sum(Var x);
Var mean(Var x);

/// log sum exp over all entries of x, stabilised by the maximum.
Var logsumexp(Var x);

/// Throws NumericError naming `where` if x holds a non-finite value.
Var check_finite(Var x, std::string_view where);

/// Plain max-shifted log-sum-exp. Throws DomainError on empty input.
double logsumexp(std::span<const double> x);

}  // namespace imm::ad
