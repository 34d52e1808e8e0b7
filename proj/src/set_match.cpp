#include "smarte/set_match.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "smarte/ops.hpp"

namespace smarte {

namespace {

double neg_log(double p) { return -std::log(std::max(p, kProbFloor)); }

template <typename SpanAt, typename RelAt>
Matrix cost_matrix(Eigen::Index k, std::span<const GoldTriple> golds, SpanAt span_at, RelAt rel_at) {
  Matrix c(k, static_cast<Eigen::Index>(golds.size()));
  for (Eigen::Index i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < golds.size(); ++j) {
      const GoldTriple& g = golds[j];
      c(i, static_cast<Eigen::Index>(j)) = neg_log(rel_at(i, g.relation)) + neg_log(span_at(0, i, g.ss)) +
                                           neg_log(span_at(1, i, g.se)) + neg_log(span_at(2, i, g.os)) +
                                           neg_log(span_at(3, i, g.oe));
    }
  }
  return c;
}

void check_gold(const GoldTriple& g, Eigen::Index n, Eigen::Index classes) {
  for (int pos : {g.ss, g.se, g.os, g.oe}) {
    if (pos < 0 || pos >= n) throw ContractError("gold span position outside the sentence");
  }
  if (g.relation < 0 || g.relation >= classes - 1) throw ContractError("gold relation outside the inventory");
}

}  // namespace

Matrix pairwise_cost(std::span<const TriplePrediction> preds, std::span<const GoldTriple> golds) {
  for (const auto& g : golds) {
    if (!preds.empty()) check_gold(g, preds[0].spans[0].size(), preds[0].relation.size());
  }
  return cost_matrix(
      static_cast<Eigen::Index>(preds.size()), golds,
      [&](int part, Eigen::Index i, int pos) { return preds[static_cast<std::size_t>(i)].spans[part](pos); },
      [&](Eigen::Index i, int rel) { return preds[static_cast<std::size_t>(i)].relation(rel); });
}

Matrix pairwise_cost(const HeadOutput& out, std::span<const GoldTriple> golds) {
  for (const auto& g : golds) check_gold(g, out.spans[0].cols(), out.relation.cols());
  return cost_matrix(
      out.relation.rows(), golds, [&](int part, Eigen::Index i, int pos) { return out.spans[part].value()(i, pos); },
      [&](Eigen::Index i, int rel) { return out.relation.value()(i, rel); });
}

Var set_loss(const HeadOutput& out, std::span<const GoldTriple> golds, const Assignment& assignment) {
  const Eigen::Index k = out.relation.rows();
  const int na = static_cast<int>(out.relation.cols()) - 1;
  if (assignment.mapping.size() != static_cast<std::size_t>(k)) {
    throw ContractError("set_loss: assignment length differs from the slot count");
  }
  std::vector<std::pair<int, int>> rel_picks;
  std::array<std::vector<std::pair<int, int>>, 4> span_picks;
  std::vector<char> seen(golds.size(), 0);
  for (int i = 0; i < static_cast<int>(k); ++i) {
    const int target = assignment.mapping[static_cast<std::size_t>(i)];
    if (target == kNaTarget) {
      rel_picks.emplace_back(i, na);
      continue;
    }
    if (target < 0 || static_cast<std::size_t>(target) >= golds.size()) {
      throw ContractError("set_loss: assignment references a missing gold triple");
    }
    const GoldTriple& g = golds[static_cast<std::size_t>(target)];
    check_gold(g, out.spans[0].cols(), out.relation.cols());
    seen[static_cast<std::size_t>(target)] = 1;
    rel_picks.emplace_back(i, g.relation);
    span_picks[0].emplace_back(i, g.ss);
    span_picks[1].emplace_back(i, g.se);
    span_picks[2].emplace_back(i, g.os);
    span_picks[3].emplace_back(i, g.oe);
  }
  for (char s : seen) {
    if (!s) throw ContractError("set_loss: a gold triple is not assigned to any slot");
  }
  Var loss = ad::nll_pick(out.relation, rel_picks, kProbFloor);
  for (int p = 0; p < 4; ++p) {
    if (!span_picks[p].empty()) loss = ad::add(loss, ad::nll_pick(out.spans[p], span_picks[p], kProbFloor));
  }
  return loss;
}

}  // namespace smarte
