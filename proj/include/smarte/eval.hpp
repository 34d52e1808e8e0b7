#pragma once

// Exact and partial (head-word) triple matching with micro-averaged scores,
// sliced by overlap pattern and by gold triple count.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "smarte/data.hpp"
#include "smarte/heads.hpp"
#include "smarte/model.hpp"

namespace smarte {

enum class MatchMode { exact, partial };

MatchMode parse_match_mode(const std::string& s);

struct MatchCounts {
  long correct = 0;
  long predicted = 0;
  long gold = 0;

  double precision() const { return predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted; }
  double recall() const { return gold == 0 ? 0.0 : static_cast<double>(correct) / gold; }
  /// 2PR / (P + R), with 0/0 taken as 0.
  double f1() const;

  MatchCounts& operator+=(const MatchCounts& o) {
    correct += o.correct;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Duplicate predictions count once; every gold triple is credited at most
/// once. Partial mode compares (subject head, relation, object head) with the
/// head word picked by `rule`.
MatchCounts match_triples(std::span<const DecodedTriple> pred, std::span<const GoldTriple> gold, MatchMode mode,
                          HeadWord rule = HeadWord::last);

struct SliceCounts {
  MatchCounts exact, partial;

  const MatchCounts& operator[](MatchMode m) const { return m == MatchMode::exact ? exact : partial; }
  SliceCounts& operator+=(const SliceCounts& o) {
    exact += o.exact;
    partial += o.partial;
    return *this;
  }
};

struct ScoredExample {
  OverlapPattern pattern = OverlapPattern::normal;
  int gold_count = 0;
  SliceCounts counts;
};

ScoredExample score_example(const Example& ex, std::span<const DecodedTriple> pred, HeadWord rule = HeadWord::last);

struct EvalReport {
  SliceCounts overall;
  std::array<SliceCounts, 3> by_pattern;  // Normal, SEO, EPO
  std::array<SliceCounts, 5> by_count;    // N = 1, 2, 3, 4, >= 5

  static const char* count_label(int bucket);
  std::string to_json() const;
};

EvalReport compute_report(std::span<const ScoredExample> scored);

struct EvalOptions {
  SlotAttentionOptions attention;
  DecodeOptions decode;
  HeadWord head_word = HeadWord::last;
};

EvalReport evaluate(Model& model, std::span<const Example> examples, const EvalOptions& opts);

}  // namespace smarte
