#pragma once

// Entropic optimal transport on dense Eigen matrices: log-domain Sinkhorn with
// rectangular marginals, plan entropy and cosine costs. Templated on the
// expression type so that any dense Eigen matrix (or block) can be passed.

#include <Eigen/Core>

#include <cmath>
#include <limits>

#include "smarte/errors.hpp"

namespace smarte {

struct SinkhornOptions {
  double epsilon = 1.0;
  int max_iters = 100;
  double tol = 1e-6;
};

template <typename Scalar>
struct SinkhornResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> plan;
  int iterations = 0;
  bool converged = false;
  /// max(|row sum - 1|, |col sum - k/n|) of the returned plan.
  Scalar deviation = std::numeric_limits<Scalar>::infinity();
};

template <typename Derived>
typename Derived::Scalar max_marginal_deviation(const Eigen::MatrixBase<Derived>& plan) {
  using Scalar = typename Derived::Scalar;
  const auto k = static_cast<Scalar>(plan.rows());
  const auto n = static_cast<Scalar>(plan.cols());
  const Scalar row_dev = (plan.rowwise().sum().array() - Scalar(1)).abs().maxCoeff();
  const Scalar col_dev = (plan.colwise().sum().array() - k / n).abs().maxCoeff();
  return std::max(row_dev, col_dev);
}

/// Similarity-convention Sinkhorn: M = exp(C / epsilon) rescaled so rows sum
/// to 1 and columns to k/n. Each iteration normalizes rows, then columns.
/// Returns the iterate with the smallest marginal deviation seen.
template <typename Derived>
SinkhornResult<typename Derived::Scalar> sinkhorn(const Eigen::MatrixBase<Derived>& cost,
                                                  const SinkhornOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Col = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  if (cost.size() == 0) throw DimensionError("sinkhorn: empty cost matrix");
  if (!(opts.epsilon > 0)) throw ConfigError("sinkhorn: epsilon must be positive");
  if (opts.max_iters < 1) throw ConfigError("sinkhorn: max_iters must be >= 1");
  if (!cost.allFinite()) throw NumericError("sinkhorn: non-finite cost");

  const Scalar log_col_target = std::log(Scalar(cost.rows()) / Scalar(cost.cols()));
  Mat f = cost.template cast<Scalar>() / Scalar(opts.epsilon);
  SinkhornResult<Scalar> best;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Col rmax = f.rowwise().maxCoeff();
    Col rlse = rmax.array() + (f.colwise() - rmax).array().exp().rowwise().sum().log();
    f.colwise() -= rlse;
    Row cmax = f.colwise().maxCoeff();
    Row clse = cmax.array() + (f.rowwise() - cmax).array().exp().colwise().sum().log();
    f.rowwise() -= clse;
    f.array() += log_col_target;

    Mat plan = f.array().exp();
    const Scalar dev = max_marginal_deviation(plan);
    if (dev <= best.deviation) {
      best.plan = std::move(plan);
      best.deviation = dev;
    }
    best.iterations = it;
    if (dev < Scalar(opts.tol)) {
      best.converged = true;
      break;
    }
  }
  return best;
}

/// H(A) = -sum A log A with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar plan_entropy(const Eigen::MatrixBase<Derived>& plan) {
  using Scalar = typename Derived::Scalar;
  Scalar h = 0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      const Scalar a = plan(i, j);
      if (a < 0) throw ContractError("plan_entropy: negative entry");
      if (a > 0) h -= a * std::log(a);
    }
  }
  return h;
}

/// C[i, j] = <q_i, k_j> / (max(|q_i|, eps) * max(|k_j|, eps)).
template <typename DerivedQ, typename DerivedK>
Eigen::Matrix<typename DerivedQ::Scalar, Eigen::Dynamic, Eigen::Dynamic> cosine_cost(
    const Eigen::MatrixBase<DerivedQ>& q, const Eigen::MatrixBase<DerivedK>& k,
    typename DerivedQ::Scalar eps = 1e-8) {
  using Scalar = typename DerivedQ::Scalar;
  if (q.cols() != k.cols()) throw DimensionError("cosine_cost: width mismatch");
  if (!(eps > 0) && ((q.rowwise().norm().array() == 0).any() || (k.rowwise().norm().array() == 0).any())) {
    throw DomainError("cosine_cost: zero-norm row");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> qn = q.rowwise().norm().cwiseMax(eps).cwiseInverse();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kn = k.rowwise().norm().cwiseMax(eps).cwiseInverse();
  return qn.asDiagonal() * (q * k.transpose()) * kn.asDiagonal();
}

}  // namespace smarte
