#pragma once

// Bipartite alignment of unordered slot predictions to gold triples, and the
// masked cross-entropy set loss computed under that alignment.

#include <Eigen/Core>

#include <compare>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smarte/autodiff.hpp"
#include "smarte/heads.hpp"

namespace smarte {

struct GoldTriple {
  int ss = 0, se = 0, os = 0, oe = 0;
  int relation = 0;

  friend auto operator<=>(const GoldTriple&, const GoldTriple&) = default;
};

inline constexpr int kNaTarget = -1;

struct Assignment {
  /// mapping[slot] = gold index, or kNaTarget.
  std::vector<int> mapping;
  double total_cost = 0.0;
};

/// Minimum-cost injective assignment of the m gold columns of `cost` (k x m)
/// into its k slot rows, O(k^2 m) with the shortest-augmenting-path form of
/// the Hungarian method. Throws CapacityError when m > k.
template <typename Derived>
Assignment hungarian(const Eigen::MatrixBase<Derived>& cost) {
  const Eigen::Index k = cost.rows(), m = cost.cols();
  if (m > k) {
    throw CapacityError("hungarian: " + std::to_string(m) + " gold triples exceed the slot budget of " +
                        std::to_string(k) + "; increase num_generated_triples");
  }
  if (!cost.allFinite()) throw NumericError("hungarian: non-finite cost");

  Assignment a;
  a.mapping.assign(static_cast<std::size_t>(k), kNaTarget);
  if (m == 0) return a;

  // Rows of the working problem are golds (1..m), columns are slots (1..k).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(m + 1), 0.0), v(static_cast<std::size_t>(k + 1), 0.0);
  std::vector<Eigen::Index> owner(static_cast<std::size_t>(k + 1), 0), way(static_cast<std::size_t>(k + 1), 0);
  for (Eigen::Index row = 1; row <= m; ++row) {
    owner[0] = row;
    Eigen::Index col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(k + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(k + 1), 0);
    do {
      used[col0] = 1;
      const Eigen::Index row0 = owner[col0];
      double delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = static_cast<double>(cost(j - 1, row0 - 1)) - u[row0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= k; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const Eigen::Index col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  for (Eigen::Index j = 1; j <= k; ++j) {
    if (owner[j] != 0) {
      a.mapping[j - 1] = static_cast<int>(owner[j] - 1);
      a.total_cost += static_cast<double>(cost(j - 1, owner[j] - 1));
    }
  }
  return a;
}

inline constexpr double kProbFloor = 1e-12;

/// cost[i][j] = -log p_rel,i(rel_j) - sum over span parts of -log p_part,i(pos_j),
/// with probabilities floored at kProbFloor.
Matrix pairwise_cost(std::span<const TriplePrediction> preds, std::span<const GoldTriple> golds);
Matrix pairwise_cost(const HeadOutput& out, std::span<const GoldTriple> golds);

/// Set loss: every slot pays -log p_rel(target), NA for unmatched
/// slots; matched slots also pay the four span terms. The assignment is a
/// constant of the backward pass.
Var set_loss(const HeadOutput& out, std::span<const GoldTriple> golds, const Assignment& assignment);

}  // namespace smarte
