#pragma once

// Corpora: the benchmark JSONL format, overlap-pattern classification and a
// seeded synthetic generator of templated relational sentences.

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smarte/set_match.hpp"

namespace smarte {

enum class OverlapPattern { normal, seo, epo };

std::string to_string(OverlapPattern p);

enum class HeadWord { first, last };

HeadWord parse_head_word(const std::string& s);

class RelationInventory {
 public:
  RelationInventory() = default;
  explicit RelationInventory(std::vector<std::string> names);

  /// Throws SchemaError for labels outside the inventory.
  int id(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  void save(const std::string& path) const;
  static RelationInventory load(const std::string& path);

  friend bool operator==(const RelationInventory& a, const RelationInventory& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

/// One annotated sentence. Triple positions index the token sequence wrapped
/// in [CLS]/[SEP], so body word w sits at position w + 1.
struct Example {
  std::string text;
  std::vector<std::string> words;
  std::vector<GoldTriple> triples;  // exact spans
  std::vector<GoldTriple> partial;  // head-word positions (start == end)
  OverlapPattern pattern = OverlapPattern::normal;

  int triple_count() const { return static_cast<int>(triples.size()); }
  /// Sequence length including the two boundary markers.
  int n() const { return static_cast<int>(words.size()) + 2; }

  friend bool operator==(const Example&, const Example&) = default;
};

/// EPO if two triples share both entity spans, else SEO if two share exactly
/// one, else Normal. Throws ContractError on an empty list.
OverlapPattern classify_overlap(std::span<const GoldTriple> triples);

std::vector<GoldTriple> head_word_triples(std::span<const GoldTriple> triples, HeadWord rule);

struct LoadOptions {
  HeadWord head_word = HeadWord::last;
};

struct LoadResult {
  std::vector<Example> examples;
  /// Lines dropped because a mention could not be located in the sentence.
  std::size_t skipped = 0;
};

/// Reads {"sentText", "relationMentions": [{"em1Text", "em2Text", "label"}]}
/// per line. Mentions resolve to the leftmost exact token match. Throws
/// ParseError (with line number) on malformed lines and SchemaError on
/// labels outside the inventory.
LoadResult load_jsonl(const std::string& path, const RelationInventory& relations, const LoadOptions& opts = {});
LoadResult parse_jsonl(std::istream& in, const RelationInventory& relations, const LoadOptions& opts = {});

void save_jsonl(const std::string& path, std::span<const Example> examples, const RelationInventory& relations);

struct RelationSpec {
  std::string name;
  std::string trigger;  // surface phrase placed between subject and object
};

struct PatternMix {
  double normal = 0.60;
  double seo = 0.24;
  double epo = 0.16;
};

struct CorpusManifest {
  int train_size = 4000;
  int valid_size = 500;
  int test_size = 500;
  std::vector<RelationSpec> relations;
  unsigned long long seed = 1;
  PatternMix pattern_mix;
  /// Relative weight of sentences with 1..5 triples. SEO/EPO sentences never
  /// have a single triple, so their draw ignores the first entry.
  std::array<double, 5> count_mix{0.40, 0.30, 0.15, 0.10, 0.05};
  /// The last `rare_relations` relations are capped at `rare_train_cap`
  /// training triples each.
  int rare_relations = 0;
  int rare_train_cap = 8;

  static std::vector<RelationSpec> default_relations();
  static CorpusManifest defaults();
  static CorpusManifest load(const std::string& path);
  void save(const std::string& path) const;
};

struct SyntheticCorpus {
  RelationInventory relations;
  std::vector<Example> train, valid, test;
};

/// Deterministic in the manifest. Pattern counts per split follow
/// pattern_mix exactly (largest-remainder rounding). Throws ConfigError for
/// infeasible manifests.
SyntheticCorpus generate_synthetic(const CorpusManifest& manifest);

/// Exact per-pattern counts for a split of `size` sentences.
std::array<int, 3> pattern_counts(const PatternMix& mix, int size);

}  // namespace smarte
