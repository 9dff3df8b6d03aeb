#include "imm/autodiff/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "imm/error.hpp"
#include "imm/simd/kernels.hpp"

namespace imm::ad {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw StructuralError("use of an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw StructuralError("operands recorded on different tapes");
  return t;
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void accumulate(std::span<double> dst, std::span<const double> src, double factor = 1.0) {
  simd::kernels().axpy(factor, src.data(), dst.data(), src.size());
}

std::size_t block_rows(const Tensor& t, std::size_t groups, const char* op) {
  if (groups == 0 || t.rows() % groups != 0) {
    throw DimensionError(std::string(op) + ": " + std::to_string(t.rows()) +
                         " rows do not split into " + std::to_string(groups) + " groups");
  }
  return t.rows() / groups;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out({m, n});
  simd::gemm_nn(m, k, n, av.data(), bv.data(), out.data());
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
    const double* g = t.incoming(self).data();
    simd::gemm_nt(m, n, k, g, t.value(ib).data(), t.grad_buffer(ia).data());
    simd::gemm_tn(k, m, n, t.value(ia).data(), g, t.grad_buffer(ib).data());
  });
}

Var matmul_nt(Var a, Var b) { return matmul_nt(a, b, 1); }

Var matmul_nt(Var a, Var b, std::size_t groups) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  const std::size_t m = block_rows(av, groups, "matmul_nt"), k = av.cols();
  const std::size_t n = block_rows(bv, groups, "matmul_nt");
  if (bv.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()) + "^T");
  }
  Tensor out({groups * m, n});
  for (std::size_t g = 0; g < groups; ++g) {
    simd::gemm_nt(m, k, n, av.data() + g * m * k, bv.data() + g * n * k, out.data() + g * m * n);
  }
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib, m, k, n, groups](Tape& t, std::uint32_t self) {
    const double* gr = t.incoming(self).data();
    const double* ad = t.value(ia).data();
    const double* bd = t.value(ib).data();
    double* da = t.grad_buffer(ia).data();
    double* db = t.grad_buffer(ib).data();
    for (std::size_t g = 0; g < groups; ++g) {
      simd::gemm_nn(m, n, k, gr + g * m * n, bd + g * n * k, da + g * m * k);
      simd::gemm_tn(n, m, k, gr + g * m * n, ad + g * m * k, db + g * n * k);
    }
  });
}

Var matmul_tn(Var a, Var b) { return matmul_tn(a, b, 1); }

Var matmul_tn(Var a, Var b, std::size_t groups) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_tn");
  require_matrix(bv, "matmul_tn");
  const std::size_t k = block_rows(av, groups, "matmul_tn"), m = av.cols(), n = bv.cols();
  if (block_rows(bv, groups, "matmul_tn") != k) {
    throw DimensionError("matmul_tn: inner dimensions differ, " + shape_string(av.shape()) +
                         "^T x " + shape_string(bv.shape()));
  }
  Tensor out({groups * m, n});
  for (std::size_t g = 0; g < groups; ++g) {
    simd::gemm_tn(m, k, n, av.data() + g * k * m, bv.data() + g * k * n, out.data() + g * m * n);
  }
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib, m, k, n, groups](Tape& t, std::uint32_t self) {
    const double* gr = t.incoming(self).data();
    const double* ad = t.value(ia).data();
    const double* bd = t.value(ib).data();
    double* da = t.grad_buffer(ia).data();
    double* db = t.grad_buffer(ib).data();
    for (std::size_t g = 0; g < groups; ++g) {
      simd::gemm_nt(k, n, m, bd + g * k * n, gr + g * m * n, da + g * k * m);
      simd::gemm_nn(k, m, n, ad + g * k * m, gr + g * m * n, db + g * k * n);
    }
  });
}

Var transpose(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  require_matrix(av, "transpose");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  const auto ia = a.id();
  return tape.push(std::move(out), [ia, m, n](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    auto da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g[j * m + i];
  });
}

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  accumulate(out.values(), b.value().values());
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    accumulate(t.grad_buffer(ia), g);
    accumulate(t.grad_buffer(ib), g);
  });
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  accumulate(out.values(), b.value().values(), -1.0);
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    accumulate(t.grad_buffer(ia), g);
    accumulate(t.grad_buffer(ib), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  simd::kernels().mul_add(av.data(), bv.data(), out.data(), out.size());
  const auto ia = a.id(), ib = b.id();
  return tape.push(std::move(out), [ia, ib](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    const auto mul_add = simd::kernels().mul_add;
    mul_add(g.data(), t.value(ib).data(), t.grad_buffer(ia).data(), g.size());
    mul_add(g.data(), t.value(ia).data(), t.grad_buffer(ib).data(), g.size());
  });
}

Var scale(Var a, double factor) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const auto ia = a.id();
  return tape.push(std::move(out), [ia, factor](Tape& t, std::uint32_t self) {
    accumulate(t.grad_buffer(ia), t.incoming(self), factor);
  });
}

Var add_row(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (bias.value().size() != n) {
    throw DimensionError("add_row: bias " + shape_string(bias.value().shape()) +
                         " does not match rows of " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const double* b = bias.value().data();
  for (std::size_t i = 0; i < m; ++i) accumulate({out.data() + i * n, n}, {b, n});
  const auto ix = x.id(), ib = bias.id();
  return tape.push(std::move(out), [ix, ib, m, n](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    accumulate(t.grad_buffer(ix), g);
    auto db = t.grad_buffer(ib);
    for (std::size_t i = 0; i < m; ++i) accumulate(db, g.subspan(i * n, n));
  });
}

Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var softmax_columns(Var x, std::size_t groups) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  const std::size_t m = block_rows(xv, groups, "softmax_columns"), n = xv.cols();
  for (double v : xv.values()) {
    if (std::isnan(v)) throw InvalidValueError("softmax_columns: NaN input");
    if (!std::isfinite(v)) throw InvalidValueError("softmax_columns: non-finite input");
  }
  Tensor out(xv.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    const double* xb = xv.data() + g * m * n;
    double* ob = out.data() + g * m * n;
    for (std::size_t j = 0; j < n; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) mx = std::max(mx, xb[i * n + j]);
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double e = std::exp(xb[i * n + j] - mx);
        ob[i * n + j] = e;
        total += e;
      }
      for (std::size_t i = 0; i < m; ++i) ob[i * n + j] /= total;
    }
  }
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, m, n, groups](Tape& t, std::uint32_t self) {
    const double* g = t.incoming(self).data();
    const double* y = t.value(self).data();
    double* dx = t.grad_buffer(ix).data();
    for (std::size_t b = 0; b < groups; ++b, g += m * n, y += m * n, dx += m * n) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += g[i * n + j] * y[i * n + j];
        for (std::size_t i = 0; i < m; ++i) dx[i * n + j] += y[i * n + j] * (g[i * n + j] - s);
      }
    }
  });
}

Var elu(Var x) {
  Tape& tape = tape_of(x);
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : std::expm1(v);
  const auto ix = x.id();
  return tape.push(std::move(out), [ix](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    const Tensor& xv = t.value(ix);
    const Tensor& y = t.value(self);
    auto dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (xv[i] > 0.0 ? 1.0 : y[i] + 1.0);
  });
}

Var conv1d(Var x, Var kernel, std::size_t groups) {
  Tape& tape = tape_of(x, kernel);
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  require_matrix(xv, "conv1d");
  if (kv.rank() != 3 || kv.shape()[0] != 3) {
    throw DimensionError("conv1d: kernel must be 3 x d x d_out, got " + shape_string(kv.shape()));
  }
  const std::size_t t_len = block_rows(xv, groups, "conv1d"), d = xv.cols(), d_out = kv.shape()[2];
  if (kv.shape()[1] != d) {
    throw DimensionError("conv1d: kernel input channels " + std::to_string(kv.shape()[1]) +
                         " != " + std::to_string(d));
  }
  // Tap tau reads input row i + tau - 1; rows outside the block are zero.
  struct Span {
    std::size_t out0, in0, count;
  };
  const std::array<Span, 3> taps{Span{1, 0, t_len - 1}, Span{0, 0, t_len}, Span{0, 1, t_len - 1}};
  Tensor out({groups * t_len, d_out});
  for (std::size_t g = 0; g < groups; ++g) {
    const double* xb = xv.data() + g * t_len * d;
    double* ob = out.data() + g * t_len * d_out;
    for (std::size_t tau = 0; tau < 3; ++tau) {
      const Span& s = taps[tau];
      if (s.count == 0) continue;
      simd::gemm_nn(s.count, d, d_out, xb + s.in0 * d, kv.data() + tau * d * d_out,
                    ob + s.out0 * d_out);
    }
  }
  const auto ix = x.id(), ik = kernel.id();
  return tape.push(std::move(out), [ix, ik, taps, t_len, d, d_out, groups](Tape& t,
                                                                          std::uint32_t self) {
    const double* kd = t.value(ik).data();
    double* dk = t.grad_buffer(ik).data();
    for (std::size_t g = 0; g < groups; ++g) {
      const double* gr = t.incoming(self).data() + g * t_len * d_out;
      const double* xd = t.value(ix).data() + g * t_len * d;
      double* dx = t.grad_buffer(ix).data() + g * t_len * d;
      for (std::size_t tau = 0; tau < 3; ++tau) {
        const Span& s = taps[tau];
        if (s.count == 0) continue;
        simd::gemm_nt(s.count, d_out, d, gr + s.out0 * d_out, kd + tau * d * d_out, dx + s.in0 * d);
        simd::gemm_tn(d, s.count, d_out, xd + s.in0 * d, gr + s.out0 * d_out, dk + tau * d * d_out);
      }
    }
  });
}

Var maxpool1d(Var x, std::size_t groups) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "maxpool1d");
  const std::size_t t_len = block_rows(xv, groups, "maxpool1d"), d = xv.cols();
  const std::size_t out_len = (t_len + 1) / 2;
  Tensor out({groups * out_len, d});
  std::vector<std::uint32_t> source(groups * out_len * d);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t r = 0; r < out_len; ++r) {
      const std::size_t lo = g * t_len + 2 * r;
      const bool pair = 2 * r + 1 < t_len;
      const std::size_t o = (g * out_len + r) * d;
      for (std::size_t c = 0; c < d; ++c) {
        std::size_t best = lo;
        if (pair && xv[(lo + 1) * d + c] > xv[lo * d + c]) best = lo + 1;
        out[o + c] = xv[best * d + c];
        source[o + c] = static_cast<std::uint32_t>(best * d + c);
      }
    }
  }
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, source = std::move(source)](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    auto dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[source[i]] += g[i];
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& tape = tape_of(x, gamma);
  if (beta.tape() != &tape) throw StructuralError("operands recorded on different tapes");
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(n) +
                         " entries");
  }
  const double* gm = gamma.value().data();
  const double* bt = beta.value().data();
  Tensor out(xv.shape());
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = gm[j] * xhat[i * n + j] + bt[j];
    }
  }
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return tape.push(std::move(out), [ix, ig, ib, m, n, xhat = std::move(xhat),
                                    inv_std = std::move(inv_std)](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    const double* gm = t.value(ig).data();
    auto dgamma = t.grad_buffer(ig);
    auto dbeta = t.grad_buffer(ib);
    auto dx = t.grad_buffer(ix);
    std::vector<double> dxhat(n);
    for (std::size_t i = 0; i < m; ++i) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        const double xh = xhat[i * n + j];
        dgamma[j] += gij * xh;
        dbeta[j] += gij;
        dxhat[j] = gij * gm[j];
        mean_d += dxhat[j];
        mean_dx += dxhat[j] * xh;
      }
      mean_d /= static_cast<double>(n);
      mean_dx /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        dx[i * n + j] += inv_std[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
      }
    }
  });
}

Var dropout(Var x, double p, Rng& rng) { return dropout(x, p, std::span<Rng>(&rng, 1)); }

Var dropout(Var x, double p, std::span<Rng> rngs) {
  Tape& tape = tape_of(x);
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (rngs.empty()) throw DimensionError("dropout: no generators");
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  const Tensor& xv = x.value();
  const std::size_t block = block_rows(xv, rngs.size(), "dropout") * xv.cols();
  std::vector<double> mask(xv.size());
  for (std::size_t g = 0; g < rngs.size(); ++g) {
    Rng& rng = rngs[g];
    for (std::size_t i = g * block; i < (g + 1) * block; ++i) {
      mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
    }
  }
  Tensor out(xv.shape());
  simd::kernels().mul_add(xv.data(), mask.data(), out.data(), out.size());
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, mask = std::move(mask)](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    simd::kernels().mul_add(g.data(), mask.data(), t.grad_buffer(ix).data(), g.size());
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.tape() != &tape) throw StructuralError("operands recorded on different tapes");
    if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
    ids.push_back(p.id());
    offsets.push_back(m * n);
    m += p.rows();
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    std::copy(v.values().begin(), v.values().end(), out.data() + offsets[i]);
  }
  return tape.push(std::move(out), [ids = std::move(ids), offsets = std::move(offsets)](
                                       Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto dst = t.grad_buffer(ids[i]);
      accumulate(dst, g.subspan(offsets[i], dst.size()));
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets, widths;
  for (const Var& p : parts) {
    if (p.tape() != &tape) throw StructuralError("operands recorded on different tapes");
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    ids.push_back(p.id());
    offsets.push_back(n);
    widths.push_back(p.cols());
    n += p.cols();
  }
  Tensor out({m, n});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * n + offsets[k]);
    }
  }
  return tape.push(std::move(out), [ids = std::move(ids), offsets = std::move(offsets),
                                    widths = std::move(widths), m, n](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto dst = t.grad_buffer(ids[k]);
      for (std::size_t i = 0; i < m; ++i) {
        accumulate(dst.subspan(i * widths[k], widths[k]), g.subspan(i * n + offsets[k], widths[k]));
      }
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (count == 0 || begin + count > xv.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(xv.shape()));
  }
  const std::size_t n = xv.cols();
  Shape shape = xv.shape();
  shape[0] = count;
  Tensor out(std::move(shape),
             std::vector<double>(xv.data() + begin * n, xv.data() + (begin + count) * n));
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, begin, n](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    accumulate(t.grad_buffer(ix).subspan(begin * n, g.size()), g);
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count, std::size_t groups) {
  if (groups == 1) return slice_rows(x, begin, count);
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  const std::size_t m = block_rows(xv, groups, "slice_rows"), n = xv.cols();
  if (count == 0 || begin + count > m) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside blocks of " +
                         std::to_string(m) + " rows");
  }
  Tensor out({groups * count, n});
  for (std::size_t g = 0; g < groups; ++g) {
    std::copy_n(xv.data() + (g * m + begin) * n, count * n, out.data() + g * count * n);
  }
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, begin, count, m, n, groups](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    auto dx = t.grad_buffer(ix);
    for (std::size_t b = 0; b < groups; ++b) {
      accumulate(dx.subspan((b * m + begin) * n, count * n), g.subspan(b * count * n, count * n));
    }
  });
}

Var tile_rows(Var x, std::size_t times) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "tile_rows");
  if (times == 0) throw DimensionError("tile_rows: zero copies");
  if (times == 1) return x;
  const std::size_t size = xv.size();
  Tensor out({times * xv.rows(), xv.cols()});
  for (std::size_t c = 0; c < times; ++c) std::copy_n(xv.data(), size, out.data() + c * size);
  const auto ix = x.id();
  return tape.push(std::move(out), [ix, times, size](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    auto dx = t.grad_buffer(ix);
    for (std::size_t c = 0; c < times; ++c) accumulate(dx, g.subspan(c * size, size));
  });
}

Var gather_rows(Var table, std::span<const std::size_t> rows) {
  Tape& tape = tape_of(table);
  const Tensor& tv = table.value();
  const std::size_t n = tv.cols();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  if (idx.empty()) throw DimensionError("gather_rows: no rows requested");
  Tensor out({idx.size(), n});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= tv.rows()) {
      throw LookupError("gather_rows: row " + std::to_string(idx[i]) + " outside table of " +
                        std::to_string(tv.rows()));
    }
    std::copy_n(tv.data() + idx[i] * n, n, out.data() + i * n);
  }
  const auto it = table.id();
  return tape.push(std::move(out), [it, n, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    auto g = t.incoming(self);
    auto dt = t.grad_buffer(it);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      accumulate(dt.subspan(idx[i] * n, n), g.subspan(i * n, n));
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const auto ix = x.id();
  return tape.push(Tensor::scalar(total), [ix](Tape& t, std::uint32_t self) {
    const double g = t.incoming(self)[0];
    for (double& d : t.grad_buffer(ix)) d += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var logsumexp(Var x) {
  Tape& tape = tape_of(x);
  const double lse = logsumexp(x.value().values());
  const auto ix = x.id();
  return tape.push(Tensor::scalar(lse), [ix](Tape& t, std::uint32_t self) {
    const double g = t.incoming(self)[0];
    const double out = t.value(self)[0];
    const Tensor& xv = t.value(ix);
    auto dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * std::exp(xv[i] - out);
  });
}

Var check_finite(Var x, std::string_view where) {
  if (!x.value().all_finite()) {
    throw NumericError("non-finite value produced in " + std::string(where));
  }
  return x;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) throw DomainError("logsumexp of an empty sequence");
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  return mx + std::log(total);
}

}  // namespace imm::ad
