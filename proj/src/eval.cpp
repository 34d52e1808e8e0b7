#include "smarte/eval.hpp"

#include <algorithm>
#include <tuple>

#include <nlohmann/json.hpp>

namespace smarte {

MatchMode parse_match_mode(const std::string& s) {
  if (s == "exact") return MatchMode::exact;
  if (s == "partial") return MatchMode::partial;
  throw ConfigError("match mode must be 'exact' or 'partial', got '" + s + "'");
}

double MatchCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

namespace {

using Key = std::tuple<int, int, int, int, int>;

Key key_of(int ss, int se, int os, int oe, int rel, MatchMode mode, HeadWord rule) {
  if (mode == MatchMode::exact) return {ss, se, rel, os, oe};
  const int s = rule == HeadWord::last ? se : ss;
  const int o = rule == HeadWord::last ? oe : os;
  return {s, s, rel, o, o};
}

}  // namespace

MatchCounts match_triples(std::span<const DecodedTriple> pred, std::span<const GoldTriple> gold, MatchMode mode,
                          HeadWord rule) {
  std::vector<DecodedTriple> unique;
  for (const auto& p : pred) {
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
  }
  std::vector<Key> gold_keys;
  for (const auto& g : gold) gold_keys.push_back(key_of(g.ss, g.se, g.os, g.oe, g.relation, mode, rule));
  std::vector<char> credited(gold_keys.size(), 0);

  MatchCounts c;
  c.predicted = static_cast<long>(unique.size());
  c.gold = static_cast<long>(gold.size());
  // Matching is key equality, so any greedy assignment is maximum.
  for (const auto& p : unique) {
    const Key k = key_of(p.ss, p.se, p.os, p.oe, p.relation, mode, rule);
    for (std::size_t j = 0; j < gold_keys.size(); ++j) {
      if (!credited[j] && gold_keys[j] == k) {
        credited[j] = 1;
        ++c.correct;
        break;
      }
    }
  }
  return c;
}

ScoredExample score_example(const Example& ex, std::span<const DecodedTriple> pred, HeadWord rule) {
  ScoredExample s;
  s.pattern = ex.pattern;
  s.gold_count = ex.triple_count();
  s.counts.exact = match_triples(pred, ex.triples, MatchMode::exact, rule);
  s.counts.partial = match_triples(pred, ex.triples, MatchMode::partial, rule);
  return s;
}

const char* EvalReport::count_label(int bucket) {
  static const char* labels[] = {"N=1", "N=2", "N=3", "N=4", "N>=5"};
  return labels[bucket];
}

EvalReport compute_report(std::span<const ScoredExample> scored) {
  EvalReport r;
  for (const auto& s : scored) {
    r.overall += s.counts;
    r.by_pattern[static_cast<int>(s.pattern)] += s.counts;
    r.by_count[std::clamp(s.gold_count, 1, 5) - 1] += s.counts;
  }
  return r;
}

std::string EvalReport::to_json() const {
  using nlohmann::json;
  auto counts = [](const MatchCounts& c) {
    return json{{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
                {"correct", c.correct},       {"predicted", c.predicted}, {"gold", c.gold}};
  };
  auto slice = [&](const SliceCounts& s) { return json{{"exact", counts(s.exact)}, {"partial", counts(s.partial)}}; };
  json j = {{"overall", slice(overall)}};
  for (int p = 0; p < 3; ++p) j["by_pattern"][to_string(static_cast<OverlapPattern>(p))] = slice(by_pattern[p]);
  for (int b = 0; b < 5; ++b) j["by_count"][count_label(b)] = slice(by_count[b]);
  return j.dump(2);
}

EvalReport evaluate(Model& model, std::span<const Example> examples, const EvalOptions& opts) {
  std::vector<ScoredExample> scored;
  scored.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto sentence = tokenize(ex.words, model.vocab);
    const auto pred = predict(model, sentence, opts.attention, opts.decode);
    scored.push_back(score_example(ex, pred, opts.head_word));
  }
  return compute_report(scored);
}

}  // namespace smarte
