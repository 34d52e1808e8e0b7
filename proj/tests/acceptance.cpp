// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Numbers and trained artifacts go to --out.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "eval_oracle.hpp"
#include "op_cases.hpp"
#include "smarte/explain.hpp"
#include "smarte/gradcheck.hpp"
#include "smarte/transport.hpp"
#include "smarte/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace smarte;
using smarte::testing::probe_weights;
using smarte::testing::random_matrix;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr double kMarginalTol = 1e-6;
constexpr double kSinkhornSeconds = 1.0;
constexpr double kHungarianSeconds = 10.0;
constexpr double kEntropySlack = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr int kGradInstances = 20;
constexpr double kPermutationTol = 1e-9;
constexpr double kTargetF1 = 0.95;
constexpr int kMaxEpochs = 50;
constexpr double kTrainSeconds = 1800.0;
constexpr double kHeadWordRate = 0.90;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

nlohmann::json results = nlohmann::json::object();

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Sinkhorn marginals on random 15 x 40 costs.
Outcome sinkhorn_marginals() {
  std::mt19937_64 rng(1001);
  std::vector<Matrix> costs;
  for (int i = 0; i < 100; ++i) costs.push_back(random_matrix(15, 40, rng));
  const SinkhornOptions opts{1.0, 1000, 1e-9};
  double worst_row = 0, worst_col = 0;
  int unconverged = 0;
  const auto t0 = Clock::now();
  for (const auto& c : costs) {
    const auto r = sinkhorn(c, opts);
    if (!r.converged) ++unconverged;
    worst_row = std::max(worst_row, (r.plan.rowwise().sum().array() - 1.0).abs().maxCoeff());
    worst_col = std::max(worst_col, (r.plan.colwise().sum().array() - 15.0 / 40.0).abs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  results["1"] = {{"max_row_dev", worst_row}, {"max_col_dev", worst_col}, {"seconds", secs}};
  return {unconverged == 0 && worst_row < kMarginalTol && worst_col < kMarginalTol && secs < kSinkhornSeconds,
          fmt("row dev %.2e, col dev %.2e, %d unconverged, %.3f s", worst_row, worst_col, unconverged, secs)};
}

// Exhaustive minimum over injective maps of the columns into the rows.
std::pair<double, std::vector<int>> brute_force_assignment(const Matrix& c) {
  const int k = static_cast<int>(c.rows()), m = static_cast<int>(c.cols());
  std::vector<int> rows(static_cast<std::size_t>(k));
  std::iota(rows.begin(), rows.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> mapping;
  do {
    double s = 0;
    for (int j = 0; j < m; ++j) s += c(rows[static_cast<std::size_t>(j)], j);
    if (s < best) {
      best = s;
      mapping.assign(static_cast<std::size_t>(k), kNaTarget);
      for (int j = 0; j < m; ++j) mapping[static_cast<std::size_t>(rows[static_cast<std::size_t>(j)])] = j;
    }
  } while (std::next_permutation(rows.begin(), rows.end()));
  return {best, mapping};
}

// 2. Hungarian against brute force.
Outcome hungarian_optimality() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> size(1, 7);
  std::vector<Matrix> cases;
  for (int i = 0; i < 1000; ++i) {
    const int s = size(rng);
    cases.push_back(random_matrix(s, s, rng, 0.0, 10.0));
  }
  for (int i = 0; i < 500; ++i) cases.push_back(random_matrix(7, 5, rng, 0.0, 10.0));
  int disagree = 0;
  double worst_gap = 0;
  const auto t0 = Clock::now();
  for (const auto& c : cases) {
    const Assignment a = hungarian(c);
    const auto [best, mapping] = brute_force_assignment(c);
    worst_gap = std::max(worst_gap, std::abs(a.total_cost - best));
    if (a.mapping != mapping || std::abs(a.total_cost - best) > 1e-9) ++disagree;
  }
  const double secs = seconds_since(t0);
  results["2"] = {{"cases", cases.size()}, {"disagreements", disagree}, {"seconds", secs}};
  return {disagree == 0 && secs < kHungarianSeconds,
          fmt("%zu cases, %d disagreements, max cost gap %.1e, %.2f s", cases.size(), disagree, worst_gap, secs)};
}

// 3. MESH does not raise plan entropy.
Outcome mesh_entropy() {
  std::mt19937_64 rng(1003);
  const SinkhornOptions opts{1.0, 1000, 1e-12};
  const MeshOptions mesh_opts{6.0, 4};
  int violations = 0;
  double mean_drop = 0, worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const Matrix c = random_matrix(15, 40, rng);
    const double before = plan_entropy(sinkhorn(c, opts).plan);
    const double after = plan_entropy(sinkhorn(mesh(c, mesh_opts, opts), opts).plan);
    if (after > before + kEntropySlack) ++violations;
    mean_drop += (before - after) / 100.0;
    worst = std::max(worst, after - before);
  }
  results["3"] = {{"violations", violations}, {"mean_entropy_drop", mean_drop}, {"max_increase", worst}};
  return {violations == 0, fmt("%d violations, mean entropy drop %.4f, max change %.2e", violations, mean_drop, worst)};
}

Var weighted(const Var& y, unsigned long long seed) {
  return ad::sum(ad::mul_const(y, probe_weights(y.rows(), y.cols(), seed)));
}

Model small_model(const std::vector<std::vector<std::string>>& words, const RelationInventory& relations, int d, int k,
                  std::mt19937_64& rng) {
  return Model::init(build_vocab(std::span<const std::vector<std::string>>(words)), relations, d, k, rng);
}

SyntheticCorpus tiny_corpus(int size, unsigned long long seed) {
  CorpusManifest m = CorpusManifest::defaults();
  m.train_size = size;
  m.valid_size = 0;
  m.test_size = 0;
  m.seed = seed;
  return generate_synthetic(m);
}

// 4. Central finite differences for every differentiable operation and the
// full loss, kGradInstances instances each.
Outcome gradient_fidelity() {
  using Check = std::function<double(unsigned long long seed)>;
  std::vector<std::pair<std::string, Check>> checks;

  for (const auto& c : testing::elementary_op_cases()) {
    checks.emplace_back(c.name, [c](unsigned long long seed) {
      std::mt19937_64 rng(seed);
      const double lo = c.positive ? 0.1 : -1.0;
      Parameter a("a", random_matrix(3, 4, rng, lo, 1.0)), b("b", random_matrix(3, 4, rng, lo, 1.0));
      Parameter* ps[] = {&a, &b};
      return check_gradients([&](Tape& t) { return weighted(c.build(t, a, b), seed); }, ps).max_rel_error;
    });
  }
  checks.emplace_back("gru_cell", [](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    GruParams p = GruParams::init(4, rng);
    Parameter h("h", random_matrix(3, 4, rng)), x("x", random_matrix(3, 4, rng));
    auto ps = p.all();
    ps.push_back(&h);
    ps.push_back(&x);
    return check_gradients([&](Tape& t) { return weighted(gru_cell(t.param(h), t.param(x), p), seed); }, ps)
        .max_rel_error;
  });
  checks.emplace_back("softmax_attention", [](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Parameter q("q", random_matrix(4, 5, rng)), k("k", random_matrix(6, 5, rng));
    Parameter* ps[] = {&q, &k};
    return check_gradients([&](Tape& t) { return weighted(softmax_attention(t.param(q), t.param(k)), seed); }, ps)
        .max_rel_error;
  });
  checks.emplace_back("cosine_cost", [](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Parameter q("q", random_matrix(4, 5, rng)), k("k", random_matrix(6, 5, rng));
    Parameter* ps[] = {&q, &k};
    return check_gradients([&](Tape& t) { return weighted(ad::cosine_cost(t.param(q), t.param(k)), seed); }, ps)
        .max_rel_error;
  });
  // Fixed iteration counts (tol 0) keep the unrolled maps smooth under the
  // finite-difference perturbation.
  const SinkhornOptions fixed{1.0, 20, 0.0};
  checks.emplace_back("sinkhorn", [fixed](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Parameter c("c", random_matrix(5, 8, rng));
    Parameter* ps[] = {&c};
    return check_gradients([&](Tape& t) { return weighted(ad::sinkhorn(t.param(c), fixed).plan, seed); }, ps)
        .max_rel_error;
  });
  checks.emplace_back("entropy_gradient", [fixed](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Parameter c("c", random_matrix(5, 8, rng));
    Parameter* ps[] = {&c};
    return check_gradients([&](Tape& t) { return weighted(ad::entropy_gradient(t.param(c), fixed), seed); }, ps)
        .max_rel_error;
  });
  checks.emplace_back("mesh", [fixed](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Parameter c("c", random_matrix(5, 8, rng));
    Parameter* ps[] = {&c};
    return check_gradients([&](Tape& t) { return weighted(ad::mesh(t.param(c), {6.0, 4}, fixed), seed); }, ps)
        .max_rel_error;
  });
  for (auto variant : {AttentionVariant::softmax, AttentionVariant::optimal_transport}) {
    checks.emplace_back("slot_attention/" + to_string(variant), [variant, fixed](unsigned long long seed) {
      std::mt19937_64 rng(seed);
      Parameter h("h", random_matrix(8, 6, rng));
      auto params = SlotAttentionParams::init(5, 6, rng);
      SlotAttentionOptions opts;
      opts.variant = variant;
      opts.sinkhorn = fixed;
      auto ps = params.all();
      ps.push_back(&h);
      return check_gradients(
                 [&](Tape& t) {
                   return weighted(run_slot_attention(t.param(h), t.param(params.slot_init), params, opts, false).slots,
                                   seed);
                 },
                 ps)
          .max_rel_error;
    });
  }
  checks.emplace_back("encoder", [](unsigned long long seed) {
    const std::vector<std::vector<std::string>> words{whitespace_tokenize("p q r s t u")};
    const Vocabulary v = build_vocab(std::span<const std::vector<std::string>>(words));
    std::mt19937_64 rng(seed);
    auto params = EncoderParams::init(v.size(), 6, rng);
    const auto s = tokenize(whitespace_tokenize(seed % 2 ? "p q r s q" : "t u p"), v);
    return check_gradients([&](Tape& t) { return weighted(encode(t, s, params), seed); }, params.all()).max_rel_error;
  });
  checks.emplace_back("heads", [](unsigned long long seed) {
    std::mt19937_64 rng(seed);
    auto params = HeadParams::init(5, 4, rng);
    Parameter z("z", random_matrix(3, 5, rng)), h("h", random_matrix(6, 5, rng));
    auto ps = params.all();
    ps.push_back(&z);
    ps.push_back(&h);
    return check_gradients(
               [&](Tape& t) {
                 auto out = predict_heads(t.param(z), t.param(h), params);
                 Var acc = weighted(out.relation, seed);
                 for (int i = 0; i < 4; ++i) acc = ad::add(acc, weighted(out.spans[i], seed * 5 + i));
                 return acc;
               },
               ps)
        .max_rel_error;
  });
  // Full set loss through the whole model, matching assignment held at its
  // value for the unperturbed parameters; dropout masks reseeded per call.
  for (auto variant : {AttentionVariant::softmax, AttentionVariant::optimal_transport}) {
    checks.emplace_back("full_loss/" + to_string(variant), [variant, fixed](unsigned long long seed) {
      const SyntheticCorpus corpus = tiny_corpus(4, 500 + seed);
      std::vector<std::vector<std::string>> words;
      for (const auto& e : corpus.train) words.push_back(e.words);
      std::mt19937_64 rng(seed);
      Model model = small_model(words, corpus.relations, 6, 6, rng);
      const Example& ex = corpus.train[seed % corpus.train.size()];
      const auto s = tokenize(ex.words, model.vocab);
      TrainConfig cfg;
      cfg.variant = variant;
      SlotAttentionOptions opts = cfg.attention();
      opts.sinkhorn = fixed;
      auto loss = [&](Tape& t, const Assignment* fixed_assignment) {
        std::mt19937_64 drop(seed);
        auto f = forward(t, model, s, opts, true, &drop);
        const Assignment a = fixed_assignment ? *fixed_assignment : hungarian(pairwise_cost(f.heads, ex.triples));
        return std::make_pair(set_loss(f.heads, ex.triples, a), a);
      };
      Assignment a;
      {
        Tape t;
        a = loss(t, nullptr).second;
      }
      GradCheckOptions gopts;
      gopts.max_entries_per_param = 12;
      gopts.seed = seed;
      return check_gradients([&](Tape& t) { return loss(t, &a).first; }, model.parameters(), gopts).max_rel_error;
    });
  }

  double worst = 0;
  std::string worst_name;
  int failing = 0;
  nlohmann::json per_op = nlohmann::json::object();
  for (const auto& [name, check] : checks) {
    double op_worst = 0;
    for (int seed = 0; seed < kGradInstances; ++seed) op_worst = std::max(op_worst, check(static_cast<unsigned>(seed)));
    per_op[name] = op_worst;
    if (!(op_worst < kGradTol)) ++failing;
    if (op_worst > worst || worst_name.empty()) {
      worst = op_worst;
      worst_name = name;
    }
  }
  results["4"] = {{"max_rel_error", per_op}};
  return {failing == 0, fmt("%zu operations x %d instances, worst %.2e (%s), %d over %.0e", checks.size(),
                            kGradInstances, worst, worst_name.c_str(), failing, kGradTol)};
}

// 5. Loss is invariant to the order of the gold triples.
Outcome permutation_invariance() {
  const SyntheticCorpus corpus = tiny_corpus(100, 1005);
  std::vector<std::vector<std::string>> words;
  for (const auto& e : corpus.train) words.push_back(e.words);
  std::mt19937_64 rng(1005);
  Model model = small_model(words, corpus.relations, 16, 15, rng);
  const SlotAttentionOptions opts = TrainConfig{}.attention();
  double worst = 0;
  int multi = 0;
  for (const auto& ex : corpus.train) {
    const auto s = tokenize(ex.words, model.vocab);
    Tape t;
    auto f = forward(t, model, s, opts, false);
    auto golds = ex.triples;
    const double base = set_loss(f.heads, golds, hungarian(pairwise_cost(f.heads, golds))).scalar();
    std::shuffle(golds.begin(), golds.end(), rng);
    if (golds.size() > 1) ++multi;
    const double moved = set_loss(f.heads, golds, hungarian(pairwise_cost(f.heads, golds))).scalar();
    worst = std::max(worst, std::abs(base - moved));
  }
  results["5"] = {{"max_abs_change", worst}, {"instances", corpus.train.size()}};
  return {worst < kPermutationTol,
          fmt("%zu instances (%d with several triples), max change %.2e", corpus.train.size(), multi, worst)};
}

struct Trained {
  TrainResult result;
  SyntheticCorpus corpus;
  double seconds = 0;
};

Trained train_on(const CorpusManifest& manifest, const TrainConfig& cfg, const std::string& label, bool quiet) {
  const auto t0 = Clock::now();
  Trained out{{}, generate_synthetic(manifest), 0};
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    if (!quiet)
      std::fprintf(stderr, "  [%s] epoch %2d loss %.4f valid exact %.4f partial %.4f (%.0f s)\n", label.c_str(),
                   r.epoch, r.train_loss, r.valid_f1_exact, r.valid_f1_partial, seconds_since(t0));
    return true;
  };
  out.result = train(out.corpus.train, out.corpus.valid, out.corpus.relations, cfg, hooks);
  out.seconds = seconds_since(t0);
  return out;
}

// 6. End-to-end training of the transport variant on the default corpus.
Outcome end_to_end(Trained& run, const std::string& out_dir, bool quiet) {
  TrainConfig cfg;
  cfg.epochs = kMaxEpochs;
  run = train_on(CorpusManifest::defaults(), cfg, "ot", quiet);
  EvalOptions eopts;
  eopts.attention = cfg.attention();
  const EvalReport report = evaluate(run.result.model, run.corpus.test, eopts);
  save_checkpoint((fs::path(out_dir) / "ot_checkpoint.json").string(), run.result.model, cfg.to_json());
  run.result.record.save_csv((fs::path(out_dir) / "ot_run.csv").string());
  const double f1 = report.overall.exact.f1();
  results["6"] = {{"test_f1_exact", f1},
                  {"test_f1_partial", report.overall.partial.f1()},
                  {"best_epoch", run.result.best_epoch},
                  {"seconds", run.seconds},
                  {"report", nlohmann::json::parse(report.to_json())}};
  return {f1 >= kTargetF1 && run.seconds < kTrainSeconds,
          fmt("test exact F1 %.4f (partial %.4f), best epoch %d of %d, %.0f s", f1, report.overall.partial.f1(),
              run.result.best_epoch, kMaxEpochs, run.seconds)};
}

// 7. Softmax against transport on an overlap-heavy split; reported only.
Outcome variant_comparison(bool quiet) {
  CorpusManifest m = CorpusManifest::defaults();
  m.train_size = 1500;
  m.valid_size = 200;
  m.test_size = 500;
  m.seed = 1007;
  m.pattern_mix = {0.10, 0.45, 0.45};
  std::string detail;
  bool finite = true;
  for (auto variant : {AttentionVariant::softmax, AttentionVariant::optimal_transport}) {
    TrainConfig cfg;
    cfg.variant = variant;
    cfg.epochs = 40;
    Trained run = train_on(m, cfg, to_string(variant), quiet);
    EvalOptions eopts;
    eopts.attention = cfg.attention();
    const EvalReport r = evaluate(run.result.model, run.corpus.test, eopts);
    const double exact = r.overall.exact.f1();
    finite = finite && std::isfinite(exact);
    results["7"][to_string(variant)] = {{"test_f1_exact", exact},
                                        {"test_f1_partial", r.overall.partial.f1()},
                                        {"seo_f1_exact", r.by_pattern[1].exact.f1()},
                                        {"epo_f1_exact", r.by_pattern[2].exact.f1()},
                                        {"seconds", run.seconds}};
    detail += fmt("%s%s exact %.4f (SEO %.4f, EPO %.4f)", detail.empty() ? "" : "; ", to_string(variant).c_str(), exact,
                  r.by_pattern[1].exact.f1(), r.by_pattern[2].exact.f1());
  }
  return {finite, detail + " [reported, not asserted]"};
}

// 8. Evaluator against the exhaustive matching oracle.
Outcome evaluator_oracle() {
  std::mt19937_64 rng(1008);
  int disagree = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = testing::random_match_case(rng);
    for (MatchMode mode : {MatchMode::exact, MatchMode::partial})
      if (match_triples(c.pred, c.gold, mode) != testing::brute_force_match(c.pred, c.gold, mode)) ++disagree;
  }
  results["8"] = {{"cases", 1000}, {"disagreements", disagree}};
  return {disagree == 0, fmt("1000 cases x 2 modes, %d disagreements; headline NYT 92.7 / WebNLG* 93.4 F1 not "
                             "reproduced (no pretrained encoder, no licensed corpora)",
                             disagree)};
}

// 9. Correctly predicting slots attend to a gold head word. Also reports how
// often any span token is in the top 5 and how often the top token is the
// relation's trigger word; neither affects the verdict.
Outcome explanation_heads(Trained& run, const std::string& out_dir) {
  Model& model = run.result.model;
  const SlotAttentionOptions opts = TrainConfig{}.attention();
  const auto relations = CorpusManifest::defaults().relations;
  long slots = 0, hits = 0, span_hits = 0, trigger_top = 0;
  for (const auto& ex : run.corpus.test) {
    const Explanation e = explain(model, tokenize(ex.words, model.vocab), opts);
    for (std::size_t i = 0; i < e.slots.size(); ++i) {
      if (!e.slots[i]) continue;
      const DecodedTriple& p = *e.slots[i];
      const auto gold = std::find_if(ex.triples.begin(), ex.triples.end(), [&](const GoldTriple& g) {
        return g.ss == p.ss && g.se == p.se && g.os == p.os && g.oe == p.oe && g.relation == p.relation;
      });
      if (gold == ex.triples.end()) continue;
      ++slots;
      const auto top = top_tokens(e.attention.row(static_cast<Eigen::Index>(i)), 5);
      auto in_top = [&](int pos) { return std::find(top.begin(), top.end(), pos) != top.end(); };
      if (in_top(gold->se) || in_top(gold->oe)) ++hits;
      if (std::any_of(top.begin(), top.end(), [&](int t) {
            return (t >= gold->ss && t <= gold->se) || (t >= gold->os && t <= gold->oe);
          }))
        ++span_hits;
      const auto cue = whitespace_tokenize(relations[static_cast<std::size_t>(gold->relation)].trigger);
      if (std::find(cue.begin(), cue.end(), e.tokens[static_cast<std::size_t>(top[0])]) != cue.end()) ++trigger_top;
    }
  }
  const std::size_t shown = std::min<std::size_t>(run.corpus.test.size(), 10);
  export_explanations(model, std::span<const Example>(run.corpus.test).first(shown),
                      (fs::path(out_dir) / "explanations").string(), opts);
  auto frac = [&](long c) { return slots == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(slots); };
  const double rate = frac(hits);
  results["9"] = {{"correct_slots", slots},
                  {"head_word_in_top5", hits},
                  {"rate", rate},
                  {"any_span_token_in_top5", frac(span_hits)},
                  {"top1_is_trigger", frac(trigger_top)}};
  return {slots > 0 && rate >= kHeadWordRate,
          fmt("%ld of %ld correctly predicting slots (%.4f) attend to a gold head word in their top 5 "
              "(any span token %.4f, top token is the relation trigger %.4f)",
              hits, slots, rate, frac(span_hits), frac(trigger_top))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  bool quiet = false;
  app.add_option("--out", out_dir, "Directory for results and trained artifacts");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 9));
  app.add_flag("--quiet", quiet, "No per-epoch progress");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out_dir);

  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                              : std::set<int>(only.begin(), only.end());
  if (selected.count(9) && !selected.count(6)) {
    std::fprintf(stderr, "criterion 9 needs the model trained by criterion 6\n");
    return 2;
  }
  Trained ot_run;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, sinkhorn_marginals},
      {2, hungarian_optimality},
      {3, mesh_entropy},
      {4, gradient_fidelity},
      {5, permutation_invariance},
      {6, [&] { return end_to_end(ot_run, out_dir, quiet); }},
      {7, [&] { return variant_comparison(quiet); }},
      {8, evaluator_oracle},
      {9, [&] { return explanation_heads(ot_run, out_dir); }},
  };

  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s: %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::ofstream(fs::path(out_dir) / "acceptance.json") << results.dump(2) << '\n';
  return failed == 0 ? 0 : 1;
}
