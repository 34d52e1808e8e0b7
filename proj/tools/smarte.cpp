// smarte: corpus generation, training, evaluation and attention explanations.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error
// (unreadable, malformed or inconsistent inputs), 3 numeric error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "smarte/eval.hpp"
#include "smarte/explain.hpp"
#include "smarte/trainer.hpp"

namespace fs = std::filesystem;
using namespace smarte;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
  std::optional<unsigned long long> seed;
  std::string variant;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Override the seed of the manifest or config");
  cmd->add_option("--variant", c.variant, "Slot attention variant")->check(CLI::IsMember({"softmax", "ot"}));
  cmd->add_flag("--quiet", c.quiet, "Only print errors");
}

std::optional<AttentionVariant> variant_of(const Common& c) {
  if (c.variant.empty()) return std::nullopt;
  return c.variant == "ot" ? AttentionVariant::optimal_transport : AttentionVariant::softmax;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Examples of one split; labels are resolved against `relations`.
std::vector<Example> load_split(const std::string& dir, const std::string& split, const RelationInventory& relations,
                                bool quiet) {
  const std::string path = in_dir(dir, split + ".jsonl");
  auto r = load_jsonl(path, relations);
  if (!quiet && r.skipped > 0) std::fprintf(stderr, "%s: skipped %zu unresolvable lines\n", path.c_str(), r.skipped);
  return std::move(r.examples);
}

int gen_data(const std::string& manifest_path, const std::string& out, const Common& c) {
  CorpusManifest m = manifest_path.empty() ? CorpusManifest::defaults() : CorpusManifest::load(manifest_path);
  if (c.seed) m.seed = *c.seed;
  const SyntheticCorpus corpus = generate_synthetic(m);
  fs::create_directories(out);
  save_jsonl(in_dir(out, "train.jsonl"), corpus.train, corpus.relations);
  save_jsonl(in_dir(out, "valid.jsonl"), corpus.valid, corpus.relations);
  save_jsonl(in_dir(out, "test.jsonl"), corpus.test, corpus.relations);
  corpus.relations.save(in_dir(out, "relations.txt"));
  m.save(in_dir(out, "manifest.json"));
  if (!c.quiet)
    std::printf("wrote %zu/%zu/%zu sentences, %d relations to %s\n", corpus.train.size(), corpus.valid.size(),
                corpus.test.size(), corpus.relations.size(), out.c_str());
  return kOk;
}

int run_train(const std::string& config_path, const std::string& data, const std::string& out, const Common& c) {
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : TrainConfig::load(config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (auto v = variant_of(c)) cfg.variant = *v;

  const RelationInventory relations = RelationInventory::load(in_dir(data, "relations.txt"));
  const auto train_set = load_split(data, "train", relations, c.quiet);
  std::vector<Example> valid_set;
  if (fs::exists(in_dir(data, "valid.jsonl"))) valid_set = load_split(data, "valid", relations, c.quiet);

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    if (!c.quiet)
      std::printf("epoch %3d  loss %.4f  valid F1 exact %.4f partial %.4f  %.1fs  sinkhorn-nonconverged %d\n",
                  r.epoch, r.train_loss, r.valid_f1_exact, r.valid_f1_partial, r.wall_seconds,
                  r.sinkhorn_nonconverged);
    std::fflush(stdout);
    return true;
  };
  hooks.on_numeric_failure = [](const std::string& sentence) {
    std::fprintf(stderr, "numeric failure on sentence: %s\n", sentence.c_str());
  };

  TrainResult r = train(train_set, valid_set, relations, cfg, hooks);
  fs::create_directories(out);
  save_checkpoint(in_dir(out, "checkpoint.json"), r.model, cfg.to_json());
  cfg.save(in_dir(out, "config.json"));
  r.model.vocab.save(in_dir(out, "vocab.txt"));
  r.model.relations.save(in_dir(out, "relations.txt"));
  r.record.save_csv(in_dir(out, "run.csv"));
  if (!c.quiet) std::printf("best epoch %d, valid exact F1 %.4f; wrote %s\n", r.best_epoch, r.best_f1, out.c_str());
  return kOk;
}

struct Loaded {
  Checkpoint ck;
  SlotAttentionOptions attention;
};

Loaded load_model(const std::string& checkpoint, const Common& c) {
  Loaded l{load_checkpoint(checkpoint), {}};
  TrainConfig cfg = TrainConfig::from_json(l.ck.config_json);
  if (auto v = variant_of(c)) cfg.variant = *v;
  l.attention = cfg.attention();
  return l;
}

void print_counts(const char* label, const MatchCounts& m) {
  std::printf("%-8s P %.4f  R %.4f  F1 %.4f  (correct %ld, predicted %ld, gold %ld)\n", label, m.precision(),
              m.recall(), m.f1(), m.correct, m.predicted, m.gold);
}

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& split, MatchMode mode,
             bool breakdown, bool json, const Common& c) {
  Loaded l = load_model(checkpoint, c);
  const auto examples = load_split(data, split, l.ck.model.relations, c.quiet);
  EvalOptions opts;
  opts.attention = l.attention;
  const EvalReport report = evaluate(l.ck.model, examples, opts);
  if (json) {
    std::printf("%s\n", report.to_json().c_str());
    return kOk;
  }
  std::printf("%s match on %zu sentences\n", mode == MatchMode::exact ? "exact" : "partial", examples.size());
  print_counts("overall", report.overall[mode]);
  if (breakdown) {
    const OverlapPattern patterns[] = {OverlapPattern::normal, OverlapPattern::seo, OverlapPattern::epo};
    for (int p = 0; p < 3; ++p) print_counts(to_string(patterns[p]).c_str(), report.by_pattern[p][mode]);
    for (int b = 0; b < 5; ++b) print_counts(EvalReport::count_label(b), report.by_count[b][mode]);
  }
  return kOk;
}

int run_explain(const std::string& checkpoint, const std::string& data, const std::string& out,
                const std::string& split, int iteration, int limit, const Common& c) {
  Loaded l = load_model(checkpoint, c);
  auto examples = load_split(data, split, l.ck.model.relations, c.quiet);
  if (limit >= 0 && static_cast<std::size_t>(limit) < examples.size()) examples.resize(static_cast<std::size_t>(limit));
  export_explanations(l.ck.model, examples, out, l.attention, iteration);
  if (!c.quiet) std::printf("wrote explanations for %zu sentences to %s\n", examples.size(), out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slot-attention relational triple extraction"};
  app.require_subcommand(1);

  Common common;
  std::string manifest, config, data, out, checkpoint, split = "test", mode_name = "exact";
  bool breakdown = false, json = false;
  int iteration = 0, limit = 20;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen->add_option("--manifest", manifest, "Corpus manifest (JSON); defaults when omitted");
  gen->add_option("--out", out, "Output directory")->required();
  add_common(gen, common);

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", config, "Training config (JSON); defaults when omitted");
  tr->add_option("--data", data, "Corpus directory")->required();
  tr->add_option("--out", out, "Output directory")->required();
  add_common(tr, common);

  auto* ev = app.add_subcommand("eval", "Score a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", data, "Corpus directory")->required();
  ev->add_option("--mode", mode_name, "Matching mode")->check(CLI::IsMember({"exact", "partial"}));
  ev->add_option("--split", split, "Split to score")->check(CLI::IsMember({"train", "valid", "test"}));
  ev->add_flag("--breakdown", breakdown, "Scores per overlap pattern and triple count");
  ev->add_flag("--json", json, "Print the full report (both modes, all slices) as JSON");
  add_common(ev, common);

  auto* ex = app.add_subcommand("explain", "Export per-slot attention maps");
  ex->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ex->add_option("--data", data, "Corpus directory")->required();
  ex->add_option("--out", out, "Output directory")->required();
  ex->add_option("--iteration", iteration, "Refinement iteration, 0 for the final one")->check(CLI::NonNegativeNumber);
  ex->add_option("--split", split, "Split to explain")->check(CLI::IsMember({"train", "valid", "test"}));
  ex->add_option("--limit", limit, "Number of sentences, -1 for all");
  add_common(ex, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_data(manifest, out, common);
    if (*tr) return run_train(config, data, out, common);
    if (*ev) return run_eval(checkpoint, data, split, parse_match_mode(mode_name), breakdown, json, common);
    if (*ex) return run_explain(checkpoint, data, out, split, iteration, limit, common);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error (line %zu): %s\n", e.line, e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
