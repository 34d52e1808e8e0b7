#pragma once

#include <random>

#include "smarte/autodiff.hpp"

namespace smarte::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

/// Fixed random weighting so that checks see a generic downstream gradient.
inline Matrix probe_weights(Eigen::Index rows, Eigen::Index cols, unsigned long long seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  return random_matrix(rows, cols, rng);
}

}  // namespace smarte::testing
