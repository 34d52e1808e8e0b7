#include "smarte/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smarte/encoder.hpp"

namespace smarte {

using nlohmann::json;

std::string to_string(OverlapPattern p) {
  switch (p) {
    case OverlapPattern::normal: return "Normal";
    case OverlapPattern::seo: return "SEO";
    case OverlapPattern::epo: return "EPO";
  }
  return "?";
}

HeadWord parse_head_word(const std::string& s) {
  if (s == "first") return HeadWord::first;
  if (s == "last") return HeadWord::last;
  throw ConfigError("head word rule must be 'first' or 'last', got '" + s + "'");
}

RelationInventory::RelationInventory(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == "NA") throw SchemaError("relation inventory must not contain NA");
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw SchemaError("duplicate relation '" + names_[i] + "'");
    }
  }
}

int RelationInventory::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw SchemaError("unknown relation label '" + name + "'");
  return it->second;
}

void RelationInventory::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write relation inventory " + path);
  for (const auto& n : names_) os << n << '\n';
}

RelationInventory RelationInventory::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read relation inventory " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) names.push_back(line);
  }
  return RelationInventory(std::move(names));
}

OverlapPattern classify_overlap(std::span<const GoldTriple> triples) {
  if (triples.empty()) throw ContractError("classify_overlap: no triples");
  using Entity = std::pair<int, int>;
  auto entities = [](const GoldTriple& t) {
    const Entity s{t.ss, t.se}, o{t.os, t.oe};
    return s < o ? std::pair{s, o} : std::pair{o, s};
  };
  bool seo = false;
  for (std::size_t a = 0; a < triples.size(); ++a) {
    const auto [a1, a2] = entities(triples[a]);
    for (std::size_t b = a + 1; b < triples.size(); ++b) {
      const auto [b1, b2] = entities(triples[b]);
      if (a1 == b1 && a2 == b2) return OverlapPattern::epo;
      if (a1 == b1 || a1 == b2 || a2 == b1 || a2 == b2) seo = true;
    }
  }
  return seo ? OverlapPattern::seo : OverlapPattern::normal;
}

std::vector<GoldTriple> head_word_triples(std::span<const GoldTriple> triples, HeadWord rule) {
  std::vector<GoldTriple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    const int s = rule == HeadWord::last ? t.se : t.ss;
    const int o = rule == HeadWord::last ? t.oe : t.os;
    out.push_back({s, s, o, o, t.relation});
  }
  return out;
}

namespace {

// Leftmost exact token-sequence match; returns the marker-indexed span or {-1, -1}.
std::pair<int, int> find_span(const std::vector<std::string>& words, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > words.size()) return {-1, -1};
  auto it = std::search(words.begin(), words.end(), needle.begin(), needle.end());
  if (it == words.end()) return {-1, -1};
  const int start = static_cast<int>(it - words.begin()) + 1;
  return {start, start + static_cast<int>(needle.size()) - 1};
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

LoadResult parse_jsonl(std::istream& in, const RelationInventory& relations, const LoadOptions& opts) {
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!obj.is_object() || !obj.contains("sentText") || !obj["sentText"].is_string() ||
        !obj.contains("relationMentions") || !obj["relationMentions"].is_array()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected sentText and relationMentions", line_no);
    }
    Example ex;
    ex.text = obj["sentText"].get<std::string>();
    ex.words = whitespace_tokenize(ex.text);
    bool resolvable = true;
    for (const auto& m : obj["relationMentions"]) {
      if (!m.is_object() || !m.contains("em1Text") || !m.contains("em2Text") || !m.contains("label") ||
          !m["em1Text"].is_string() || !m["em2Text"].is_string() || !m["label"].is_string()) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed relation mention", line_no);
      }
      const int rel = relations.id(m["label"].get<std::string>());
      auto subj = find_span(ex.words, whitespace_tokenize(m["em1Text"].get<std::string>()));
      auto obj_span = find_span(ex.words, whitespace_tokenize(m["em2Text"].get<std::string>()));
      if (subj.first < 0 || obj_span.first < 0) {
        resolvable = false;
        continue;
      }
      GoldTriple t{subj.first, subj.second, obj_span.first, obj_span.second, rel};
      if (std::find(ex.triples.begin(), ex.triples.end(), t) == ex.triples.end()) ex.triples.push_back(t);
    }
    if (!resolvable || ex.triples.empty()) {
      ++result.skipped;
      continue;
    }
    ex.partial = head_word_triples(ex.triples, opts.head_word);
    ex.pattern = classify_overlap(ex.triples);
    result.examples.push_back(std::move(ex));
  }
  return result;
}

LoadResult load_jsonl(const std::string& path, const RelationInventory& relations, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path);
  return parse_jsonl(in, relations, opts);
}

void save_jsonl(const std::string& path, std::span<const Example> examples, const RelationInventory& relations) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write corpus " + path);
  for (const auto& ex : examples) {
    json mentions = json::array();
    for (const auto& t : ex.triples) {
      mentions.push_back({{"em1Text", join(ex.words, t.ss - 1, t.se)},
                          {"em2Text", join(ex.words, t.os - 1, t.oe)},
                          {"label", relations.name(t.relation)}});
    }
    json line = {{"sentText", ex.text}, {"relationMentions", mentions}};
    os << line.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<RelationSpec> CorpusManifest::default_relations() {
  return {{"founded", "founded"},       {"works_for", "works for"}, {"born_in", "was born in"},
          {"lives_in", "lives in"},     {"located_in", "sits in"},  {"capital_of", "governs"},
          {"leader_of", "leads"},       {"married_to", "married"},  {"member_of", "joined"},
          {"owner_of", "owns"}};
}

CorpusManifest CorpusManifest::defaults() {
  CorpusManifest m;
  m.relations = default_relations();
  return m;
}

CorpusManifest CorpusManifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read manifest " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  static const std::set<std::string> known = {"train_size",    "valid_size",     "test_size",
                                              "relations",     "seed",           "pattern_mix",
                                              "count_mix",     "rare_relations", "rare_train_cap"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("manifest: unknown key '" + it.key() + "'");
  }
  CorpusManifest m = defaults();
  try {
    m.train_size = j.value("train_size", m.train_size);
    m.valid_size = j.value("valid_size", m.valid_size);
    m.test_size = j.value("test_size", m.test_size);
    m.seed = j.value("seed", m.seed);
    m.rare_relations = j.value("rare_relations", m.rare_relations);
    m.rare_train_cap = j.value("rare_train_cap", m.rare_train_cap);
    if (j.contains("relations")) {
      m.relations.clear();
      for (const auto& r : j["relations"]) {
        m.relations.push_back({r.at("name").get<std::string>(), r.at("trigger").get<std::string>()});
      }
    }
    if (j.contains("pattern_mix")) {
      const auto& p = j["pattern_mix"];
      m.pattern_mix = {p.value("normal", 0.0), p.value("seo", 0.0), p.value("epo", 0.0)};
    }
    if (j.contains("count_mix")) {
      auto c = j["count_mix"].get<std::vector<double>>();
      if (c.size() != 5) throw ConfigError("manifest: count_mix needs 5 weights (N = 1..5)");
      std::copy(c.begin(), c.end(), m.count_mix.begin());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return m;
}

void CorpusManifest::save(const std::string& path) const {
  json rel = json::array();
  for (const auto& r : relations) rel.push_back({{"name", r.name}, {"trigger", r.trigger}});
  json j = {{"train_size", train_size},
            {"valid_size", valid_size},
            {"test_size", test_size},
            {"relations", rel},
            {"seed", seed},
            {"pattern_mix", {{"normal", pattern_mix.normal}, {"seo", pattern_mix.seo}, {"epo", pattern_mix.epo}}},
            {"count_mix", count_mix},
            {"rare_relations", rare_relations},
            {"rare_train_cap", rare_train_cap}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest " + path);
  os << j.dump(2) << '\n';
}

std::array<int, 3> pattern_counts(const PatternMix& mix, int size) {
  const std::array<double, 3> w{mix.normal, mix.seo, mix.epo};
  const double total = w[0] + w[1] + w[2];
  if (!(total > 0) || w[0] < 0 || w[1] < 0 || w[2] < 0) throw ConfigError("pattern_mix weights must be >= 0, not all 0");
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = size * w[i] / total;
    counts[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int i = 0; assigned < size; ++i, ++assigned) ++counts[order[i % 3]];
  return counts;
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

const std::vector<std::string> kPrefixes[] = {
    {}, {}, {"reportedly", ","}, {"in", "1998", ","}, {"according", "to", "sources", ","}, {"last", "year", ","},
    {"officials", "said", "that"}};
const std::vector<std::string> kSuffixes[] = {
    {}, {}, {",", "sources", "said"}, {"last", "week"}, {",", "according", "to", "records"}, {"in", "recent", "years"}};
const std::vector<std::string> kSeparators[] = {{";"}, {",", "while"}, {".", "meanwhile", ","}};

std::vector<std::string> make_word_pool(std::mt19937_64& rng, std::size_t count) {
  static const char* syllables[] = {"ba", "ko", "ri", "mel", "dan", "tor", "vi", "sa", "lu", "gen",
                                    "fa", "ro", "ni", "pe", "zu", "ha", "mo", "ti", "ca", "ler"};
  std::uniform_int_distribution<int> syl(0, 19), len(2, 3);
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < count) {
    std::string w;
    const int l = len(rng);
    for (int i = 0; i < l; ++i) w += syllables[syl(rng)];
    w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

class Generator {
 public:
  Generator(const CorpusManifest& m) : m_(m), rng_(m.seed) {
    const auto words = make_word_pool(rng_, 300);
    std::discrete_distribution<int> len({0.5, 0.35, 0.15});
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::set<std::vector<std::string>> seen;
    while (entities_.size() < 800) {
      const int l = len(rng_) + 1;
      std::vector<std::string> e;
      while (static_cast<int>(e.size()) < l) {
        const auto& w = words[pick(rng_)];
        if (std::find(e.begin(), e.end(), w) == e.end()) e.push_back(w);
      }
      if (seen.insert(e).second) entities_.push_back(std::move(e));
    }
    for (const auto& r : m_.relations) triggers_.push_back(whitespace_tokenize(r.trigger));
    rare_counts_.assign(m_.relations.size(), 0);
  }

  std::vector<Example> split(int size, bool capped) {
    capped_ = capped;
    const auto counts = pattern_counts(m_.pattern_mix, size);
    std::vector<OverlapPattern> patterns;
    for (int i = 0; i < counts[0]; ++i) patterns.push_back(OverlapPattern::normal);
    for (int i = 0; i < counts[1]; ++i) patterns.push_back(OverlapPattern::seo);
    for (int i = 0; i < counts[2]; ++i) patterns.push_back(OverlapPattern::epo);
    std::shuffle(patterns.begin(), patterns.end(), rng_);
    std::vector<Example> out;
    out.reserve(patterns.size());
    for (OverlapPattern p : patterns) out.push_back(example(p));
    return out;
  }

 private:
  enum class Kind { simple, shared, epo, chain };
  struct Group {
    Kind kind;
    int size;  // triples produced
  };

  int draw_count(OverlapPattern p) {
    std::vector<double> w(m_.count_mix.begin(), m_.count_mix.end());
    if (p != OverlapPattern::normal) w[0] = 0.0;
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) throw ConfigError("count_mix leaves no valid triple count");
    std::discrete_distribution<int> d(w.begin(), w.end());
    return d(rng_) + 1;
  }

  std::vector<Group> plan(OverlapPattern p, int n) {
    std::vector<Group> groups;
    int left = n;
    auto coin = [&](double prob) { return std::bernoulli_distribution(prob)(rng_); };
    if (p == OverlapPattern::epo) {
      groups.push_back({Kind::epo, 2});
      left -= 2;
    } else if (p == OverlapPattern::seo) {
      if (left >= 3 && coin(0.5)) {
        groups.push_back({Kind::shared, 3});
        left -= 3;
      } else {
        groups.push_back({coin(0.5) ? Kind::shared : Kind::chain, 2});
        left -= 2;
      }
    }
    while (left > 0) {
      if (p == OverlapPattern::normal || left == 1 || coin(0.5)) {
        groups.push_back({Kind::simple, 1});
        left -= 1;
      } else {
        const Kind extra[] = {Kind::shared, Kind::chain, Kind::epo};
        const int choices = p == OverlapPattern::epo ? 3 : 2;
        groups.push_back({extra[std::uniform_int_distribution<int>(0, choices - 1)(rng_)], 2});
        left -= 2;
      }
    }
    std::shuffle(groups.begin(), groups.end(), rng_);
    return groups;
  }

  bool allowed(int rel) const {
    const int t = static_cast<int>(m_.relations.size());
    return !(capped_ && rel >= t - m_.rare_relations && rare_counts_[rel] >= m_.rare_train_cap);
  }

  int relation(int exclude = -1) {
    std::vector<int> ok;
    for (int r = 0; r < static_cast<int>(m_.relations.size()); ++r) {
      if (r != exclude && allowed(r)) ok.push_back(r);
    }
    if (ok.empty()) throw ConfigError("no relation available under the rare-relation caps");
    const int r = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng_)];
    if (capped_) ++rare_counts_[r];
    return r;
  }

  // Renders one sentence; triples are in sentence order.
  Example example(OverlapPattern pattern) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      rare_snapshot_ = rare_counts_;
      Example ex = try_example(pattern);
      if (classify_overlap(ex.triples) == pattern) return ex;
      rare_counts_ = rare_snapshot_;
    }
    throw ConfigError("could not realize overlap pattern " + to_string(pattern));
  }

  Example try_example(OverlapPattern pattern) {
    const int n = draw_count(pattern);
    const auto groups = plan(pattern, n);
    Example ex;
    used_words_.clear();
    auto& words = ex.words;
    auto append = [&](const std::vector<std::string>& toks) {
      const int start = static_cast<int>(words.size()) + 1;
      words.insert(words.end(), toks.begin(), toks.end());
      return std::pair<int, int>{start, start + static_cast<int>(toks.size()) - 1};
    };
    auto entity = [&]() { return append(fresh_entity()); };
    auto pick = [&](const auto& options) {
      return options[std::uniform_int_distribution<std::size_t>(0, std::size(options) - 1)(rng_)];
    };
    auto add = [&](std::pair<int, int> s, int rel, std::pair<int, int> o) {
      ex.triples.push_back({s.first, s.second, o.first, o.second, rel});
    };

    append(pick(kPrefixes));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g > 0) append(pick(kSeparators));
      switch (groups[g].kind) {
        case Kind::simple: {
          auto s = entity();
          const int r = relation();
          append(triggers_[r]);
          add(s, r, entity());
          break;
        }
        case Kind::shared: {
          auto s = entity();
          for (int i = 0; i < groups[g].size; ++i) {
            if (i > 0) append({"and"});
            const int r = relation();
            append(triggers_[r]);
            add(s, r, entity());
          }
          break;
        }
        case Kind::epo: {
          auto s = entity();
          const int r1 = relation();
          const int r2 = relation(r1);
          append(triggers_[r1]);
          append({"and"});
          append(triggers_[r2]);
          auto o = entity();
          add(s, r1, o);
          add(s, r2, o);
          break;
        }
        case Kind::chain: {
          auto s = entity();
          const int r1 = relation();
          append(triggers_[r1]);
          auto mid = entity();
          add(s, r1, mid);
          append({",", "which"});
          const int r2 = relation();
          append(triggers_[r2]);
          add(mid, r2, entity());
          break;
        }
      }
    }
    append(pick(kSuffixes));
    ex.text = join(words, 0, words.size());
    ex.partial = head_word_triples(ex.triples, HeadWord::last);
    ex.pattern = classify_overlap(ex.triples);
    return ex;
  }

  // An entity sharing no word with the entities already in the sentence, so
  // that leftmost matching recovers its span.
  const std::vector<std::string>& fresh_entity() {
    std::uniform_int_distribution<std::size_t> pick(0, entities_.size() - 1);
    for (;;) {
      const auto& e = entities_[pick(rng_)];
      if (std::none_of(e.begin(), e.end(), [&](const std::string& w) { return used_words_.count(w) != 0; })) {
        used_words_.insert(e.begin(), e.end());
        return e;
      }
    }
  }

  const CorpusManifest& m_;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::string>> entities_;
  std::vector<std::vector<std::string>> triggers_;
  std::set<std::string> used_words_;
  std::vector<int> rare_counts_, rare_snapshot_;
  bool capped_ = false;
};

}  // namespace

SyntheticCorpus generate_synthetic(const CorpusManifest& manifest) {
  const int t = static_cast<int>(manifest.relations.size());
  if (t == 0) throw ConfigError("manifest declares no relations");
  if (manifest.train_size < 0 || manifest.valid_size < 0 || manifest.test_size < 0) {
    throw ConfigError("split sizes must be non-negative");
  }
  if (manifest.pattern_mix.epo > 0 && t < 2) throw ConfigError("EPO sentences need at least two relations");
  if (manifest.rare_relations < 0 || manifest.rare_relations > t) throw ConfigError("rare_relations out of range");
  std::set<std::string> names;
  for (const auto& r : manifest.relations) {
    if (r.name.empty() || whitespace_tokenize(r.trigger).empty()) throw ConfigError("relation needs a name and trigger");
    if (!names.insert(r.name).second) throw ConfigError("duplicate relation '" + r.name + "'");
  }

  std::vector<std::string> rel_names;
  for (const auto& r : manifest.relations) rel_names.push_back(r.name);
  SyntheticCorpus corpus{RelationInventory(std::move(rel_names)), {}, {}, {}};
  Generator gen(manifest);
  corpus.train = gen.split(manifest.train_size, manifest.rare_relations > 0);
  corpus.valid = gen.split(manifest.valid_size, false);
  corpus.test = gen.split(manifest.test_size, false);
  return corpus;
}

}  // namespace smarte
