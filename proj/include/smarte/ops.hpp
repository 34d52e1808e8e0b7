#pragma once

// Differentiable operations on Var. Shapes are checked eagerly and reported
// through DimensionError; broadcasting is limited to the explicit
// *_rowvec / *_colvec / *_scalar variants.

#include <span>
#include <utility>
#include <vector>

#include "smarte/autodiff.hpp"

namespace smarte::ad {

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

/// a[i, j] + v[0, j]
Var add_rowvec(const Var& a, const Var& v);
/// a[i, j] * v[i, 0]
Var mul_colvec(const Var& a, const Var& v);
/// a[i, j] * v[0, j]
Var mul_rowvec(const Var& a, const Var& v);
/// a * mask with a constant mask (dropout).
Var mul_const(const Var& a, const Matrix& mask);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
/// Throws DomainError on any non-positive entry.
Var log(const Var& a);

Var sum(const Var& a);
/// m x 1 column of row sums.
Var row_sums(const Var& a);
/// 1 x n row of column sums.
Var col_sums(const Var& a);

Var softmax_rows(const Var& a);
Var softmax_cols(const Var& a);
/// (a + eps) / rowsum(a + eps)
Var normalize_rows(const Var& a, double eps = 0.0);
/// Rows scaled to unit L2 norm, with the norm floored at `eps`.
Var l2_normalize_rows(const Var& a, double eps = 1e-8);
/// Per-row standardization to zero mean, unit variance; no affine part.
Var layer_norm_rows(const Var& a, double eps = 1e-9);

/// f[i, j] - logsumexp_j f[i, :] + log_target
Var log_normalize_rows(const Var& f, double log_target);
/// f[i, j] - logsumexp_i f[:, j] + log_target
Var log_normalize_cols(const Var& f, double log_target);

/// Rows of the table selected by `ids`.
Var gather_rows(const Var& table, std::span<const int> ids);

/// S[i, j] = sum_c v[c] * tanh(zw[i, c] + hw[j, c]); zw is k x d, hw n x d, v 1 x d.
Var additive_scores(const Var& zw, const Var& hw, const Var& v);

/// -sum over (row, col) of log(max(p[row, col], floor)); 1x1.
Var nll_pick(const Var& p, std::span<const std::pair<int, int>> picks, double floor = 1e-12);

}  // namespace smarte::ad
