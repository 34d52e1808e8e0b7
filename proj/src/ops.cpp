#include "smarte/ops.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace smarte::ad {
namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
  }
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_str(a.value()) + " * " +
                         shape_str(b.value()));
  }
  const auto ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions disagree " + shape_str(a.value()) + " * (" +
                         shape_str(b.value()) + ")^T");
  }
  const auto ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() * b.value().transpose(), {a, b},
                           [ia, ib](Tape& t, std::uint32_t self) {
                             const Matrix& g = t.grad(self);
                             if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib));
                             if (t.requires_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
                           });
}

Var transpose(const Var& a) {
  const auto ia = a.id();
  return tape_of(a).record(a.value().transpose(), {a}, [ia](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).transpose());
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  const auto ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  const auto ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(const Var& a, double s) {
  const auto ia = a.id();
  return tape_of(a).record(a.value() * s, {a}, [ia, s](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self) * s);
  });
}

Var add_scalar(const Var& a, double s) {
  const auto ia = a.id();
  Matrix out = a.value().array() + s;
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self));
  });
}

Var add_rowvec(const Var& a, const Var& v) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    throw DimensionError("add_rowvec: expected 1x" + std::to_string(a.cols()) + " vector, got " +
                         shape_str(v.value()));
  }
  const auto ia = a.id(), iv = v.id();
  Matrix out = a.value().rowwise() + v.value().row(0);
  return tape_of(a).record(std::move(out), {a, v}, [ia, iv](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ia, g);
    if (t.requires_grad(iv)) t.accumulate(iv, g.colwise().sum());
  });
}

Var mul_colvec(const Var& a, const Var& v) {
  if (v.cols() != 1 || v.rows() != a.rows()) {
    throw DimensionError("mul_colvec: expected " + std::to_string(a.rows()) + "x1 vector, got " +
                         shape_str(v.value()));
  }
  const auto ia = a.id(), iv = v.id();
  Matrix out = v.value().col(0).asDiagonal() * a.value();
  return tape_of(a).record(std::move(out), {a, v}, [ia, iv](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, t.value(iv).col(0).asDiagonal() * g);
    if (t.requires_grad(iv)) t.accumulate(iv, g.cwiseProduct(t.value(ia)).rowwise().sum());
  });
}

Var mul_rowvec(const Var& a, const Var& v) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    throw DimensionError("mul_rowvec: expected 1x" + std::to_string(a.cols()) + " vector, got " +
                         shape_str(v.value()));
  }
  const auto ia = a.id(), iv = v.id();
  Matrix out = a.value() * v.value().row(0).asDiagonal();
  return tape_of(a).record(std::move(out), {a, v}, [ia, iv](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(iv).row(0).asDiagonal());
    if (t.requires_grad(iv)) t.accumulate(iv, g.cwiseProduct(t.value(ia)).colwise().sum());
  });
}

Var mul_const(const Var& a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw DimensionError("mul_const: mask shape " + shape_str(mask) + " vs " + shape_str(a.value()));
  }
  const auto ia = a.id();
  Matrix out = a.value().cwiseProduct(mask);
  return tape_of(a).record(std::move(out), {a}, [ia, mask](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).cwiseProduct(mask));
  });
}

Var tanh(const Var& a) {
  const auto ia = a.id();
  Matrix out = a.value().array().tanh();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(ia, (t.grad(self).array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  const auto ia = a.id();
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(ia, (t.grad(self).array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var exp(const Var& a) {
  const auto ia = a.id();
  Matrix out = a.value().array().exp();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).cwiseProduct(t.value(self)));
  });
}

Var log(const Var& a) {
  if ((a.value().array() <= 0.0).any()) throw DomainError("log: non-positive input");
  const auto ia = a.id();
  Matrix out = a.value().array().log();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).cwiseQuotient(t.value(ia)));
  });
}

Var sum(const Var& a) {
  const auto ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const auto r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(out), {a}, [ia, r, c](Tape& t, std::uint32_t self) {
    t.accumulate(ia, Matrix::Constant(r, c, t.grad(self)(0, 0)));
  });
}

Var row_sums(const Var& a) {
  const auto ia = a.id();
  const auto c = a.cols();
  Matrix out = a.value().rowwise().sum();
  return tape_of(a).record(std::move(out), {a}, [ia, c](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).col(0).replicate(1, c));
  });
}

Var col_sums(const Var& a) {
  const auto ia = a.id();
  const auto r = a.rows();
  Matrix out = a.value().colwise().sum();
  return tape_of(a).record(std::move(out), {a}, [ia, r](Tape& t, std::uint32_t self) {
    t.accumulate(ia, t.grad(self).row(0).replicate(r, 1));
  });
}

Var softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  if (x.hasNaN()) throw NumericError("softmax_rows: NaN input");
  Matrix y = (x.colwise() - x.rowwise().maxCoeff()).array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  const auto ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    ColVector dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(ia, (y.array() * (g.colwise() - dot).array()).matrix());
  });
}

Var softmax_cols(const Var& a) {
  const Matrix& x = a.value();
  if (x.hasNaN()) throw NumericError("softmax_cols: NaN input");
  Matrix y = (x.rowwise() - x.colwise().maxCoeff()).array().exp();
  y.array().rowwise() /= y.colwise().sum().array();
  const auto ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    RowVector dot = g.cwiseProduct(y).colwise().sum();
    t.accumulate(ia, (y.array() * (g.rowwise() - dot).array()).matrix());
  });
}

Var normalize_rows(const Var& a, double eps) {
  Matrix shifted = a.value().array() + eps;
  ColVector s = shifted.rowwise().sum();
  if ((s.array() <= 0.0).any()) throw DomainError("normalize_rows: non-positive row sum");
  Matrix y = s.cwiseInverse().asDiagonal() * shifted;
  const auto ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia, s](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    ColVector dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(ia, s.cwiseInverse().asDiagonal() * (g.colwise() - dot));
  });
}

Var l2_normalize_rows(const Var& a, double eps) {
  ColVector norms = a.value().rowwise().norm();
  ColVector denom = norms.cwiseMax(eps);
  Matrix y = denom.cwiseInverse().asDiagonal() * a.value();
  const auto ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia, norms, denom, eps](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix d = g;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (norms(i) > eps) d.row(i) -= y.row(i) * g.row(i).dot(y.row(i));
      d.row(i) /= denom(i);
    }
    t.accumulate(ia, d);
  });
}

Var layer_norm_rows(const Var& a, double eps) {
  const Matrix& x = a.value();
  const auto n = static_cast<double>(x.cols());
  ColVector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  ColVector inv_std = ((centered.array().square().rowwise().sum() / n) + eps).rsqrt();
  Matrix y = inv_std.asDiagonal() * centered;
  const auto ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia, inv_std, n](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    ColVector g_mean = g.rowwise().mean();
    ColVector gy_mean = g.cwiseProduct(y).rowwise().sum() / n;
    Matrix d = (g.colwise() - g_mean) - gy_mean.asDiagonal() * y;
    t.accumulate(ia, inv_std.asDiagonal() * d);
  });
}

namespace {

ColVector logsumexp_rows(const Matrix& f) {
  ColVector m = f.rowwise().maxCoeff();
  return m.array() + (f.colwise() - m).array().exp().rowwise().sum().log();
}

RowVector logsumexp_cols(const Matrix& f) {
  RowVector m = f.colwise().maxCoeff();
  return m.array() + (f.rowwise() - m).array().exp().colwise().sum().log();
}

}  // namespace

Var log_normalize_rows(const Var& f, double log_target) {
  ColVector lse = logsumexp_rows(f.value());
  Matrix out = (f.value().colwise() - lse).array() + log_target;
  const auto ia = f.id();
  return tape_of(f).record(std::move(out), {f}, [ia, log_target](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix p = (t.value(self).array() - log_target).exp();
    ColVector gs = g.rowwise().sum();
    t.accumulate(ia, g - gs.asDiagonal() * p);
  });
}

Var log_normalize_cols(const Var& f, double log_target) {
  RowVector lse = logsumexp_cols(f.value());
  Matrix out = (f.value().rowwise() - lse).array() + log_target;
  const auto ia = f.id();
  return tape_of(f).record(std::move(out), {f}, [ia, log_target](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix p = (t.value(self).array() - log_target).exp();
    RowVector gs = g.colwise().sum();
    t.accumulate(ia, g - p * gs.asDiagonal());
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  const Matrix& tab = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw LookupError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                        std::to_string(tab.rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  }
  const auto it = table.id();
  std::vector<int> idx(ids.begin(), ids.end());
  const auto rows = tab.rows();
  return tape_of(table).record(std::move(out), {table}, [it, idx, rows](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix d = Matrix::Zero(rows, g.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(it, d);
  });
}

namespace {

// tanh through the vectorized exp; absolute error stays at rounding level.
void fast_tanh_inplace(Eigen::Ref<Matrix> x) {
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t = (-2.0 * x.array().abs()).exp();
  t = (1.0 - t) / (1.0 + t);
  double* out = x.data();
  const double* mag = t.data();
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = std::copysign(mag[i], out[i]);
}

}  // namespace

Var additive_scores(const Var& zw, const Var& hw, const Var& v) {
  const Matrix& Z = zw.value();
  const Matrix& H = hw.value();
  if (Z.cols() != H.cols() || v.rows() != 1 || v.cols() != Z.cols()) {
    throw DimensionError("additive_scores: widths disagree " + shape_str(Z) + ", " + shape_str(H) +
                         ", " + shape_str(v.value()));
  }
  const Eigen::Index k = Z.rows(), n = H.rows(), d = Z.cols();
  // act row (i * n + j) holds tanh(zw[i] + hw[j]).
  Matrix act(k * n, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    act.middleRows(i * n, n) = H.rowwise() + Z.row(i);
  }
  fast_tanh_inplace(act);
  Matrix scores(k, n);
  ColVector flat = act * v.value().row(0).transpose();
  for (Eigen::Index i = 0; i < k; ++i) scores.row(i) = flat.segment(i * n, n).transpose();

  const auto iz = zw.id(), ih = hw.id(), iv = v.id();
  return tape_of(zw).record(
      std::move(scores), {zw, hw, v},
      [iz, ih, iv, act = std::move(act), k, n, d](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad(self);
        const RowVector vv = t.value(iv).row(0);
        if (t.requires_grad(iv)) {
          RowVector dv = RowVector::Zero(d);
          for (Eigen::Index i = 0; i < k; ++i) dv += g.row(i) * act.middleRows(i * n, n);
          t.accumulate(iv, dv);
        }
        if (!t.requires_grad(iz) && !t.requires_grad(ih)) return;
        Matrix dz = Matrix::Zero(k, d);
        Matrix dh = Matrix::Zero(n, d);
        for (Eigen::Index i = 0; i < k; ++i) {
          // dpre[j, c] = g[i, j] * v[c] * (1 - act^2)
          Matrix dpre = (1.0 - act.middleRows(i * n, n).array().square()).matrix();
          dpre = g.row(i).transpose().asDiagonal() * dpre * vv.asDiagonal();
          dz.row(i) = dpre.colwise().sum();
          dh += dpre;
        }
        t.accumulate(iz, dz);
        t.accumulate(ih, dh);
      });
}

Var nll_pick(const Var& p, std::span<const std::pair<int, int>> picks, double floor) {
  const Matrix& P = p.value();
  double loss = 0.0;
  for (auto [r, c] : picks) {
    if (r < 0 || r >= P.rows() || c < 0 || c >= P.cols()) throw LookupError("nll_pick: index out of range");
    loss -= std::log(std::max(P(r, c), floor));
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  const auto ip = p.id();
  std::vector<std::pair<int, int>> idx(picks.begin(), picks.end());
  return tape_of(p).record(std::move(out), {p}, [ip, idx, floor](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)(0, 0);
    const Matrix& P = t.value(ip);
    Matrix d = Matrix::Zero(P.rows(), P.cols());
    for (auto [r, c] : idx) {
      if (P(r, c) > floor) d(r, c) -= g / P(r, c);
    }
    t.accumulate(ip, d);
  });
}

}  // namespace smarte::ad
