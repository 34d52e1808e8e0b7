#include "smarte/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "smarte/eval.hpp"
#include "smarte/ops.hpp"
#include "smarte/set_match.hpp"

namespace smarte {

using nlohmann::json;

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(num_classes >= 2, "num_classes must be >= 2 (at least one relation plus NA)");
  require(num_generated_triples >= 1, "num_generated_triples must be >= 1");
  require(encoder_lr > 0 && decoder_lr > 0, "learning rates must be positive");
  require(mesh_lr >= 0, "mesh_lr must be >= 0");
  require(n_mesh_iters >= 0, "n_mesh_iters must be >= 0");
  require(num_iterations >= 1, "num_iterations must be >= 1");
  require(slot_dropout >= 0 && slot_dropout < 1, "slot_dropout must lie in [0, 1)");
  require(max_grad_norm > 0, "max_grad_norm must be positive");
  require(weight_decay >= 0, "weight_decay must be >= 0");
  require(lr_decay > 0 && lr_decay <= 1, "lr_decay must lie in (0, 1]");
  require(warmup_rate >= 0 && warmup_rate < 1, "warmup_rate must lie in [0, 1)");
  require(sinkhorn_epsilon > 0, "sinkhorn_epsilon must be positive");
  require(sinkhorn_max_iters >= 1, "sinkhorn_max_iters must be >= 1");
  require(sinkhorn_tol > 0, "sinkhorn_tol must be positive");
  require(d_model >= 2 && d_model % 2 == 0, "d_model must be even and >= 2");
}

SlotAttentionOptions TrainConfig::attention() const {
  SlotAttentionOptions o;
  o.iterations = num_iterations;
  o.variant = variant;
  o.sinkhorn = {sinkhorn_epsilon, sinkhorn_max_iters, sinkhorn_tol};
  o.mesh = {mesh_lr, n_mesh_iters};
  o.dropout = slot_dropout;
  return o;
}

std::string TrainConfig::to_json() const {
  json j = {{"batch_size", batch_size},
            {"epochs", epochs},
            {"num_classes", num_classes},
            {"num_generated_triples", num_generated_triples},
            {"encoder_lr", encoder_lr},
            {"decoder_lr", decoder_lr},
            {"mesh_lr", mesh_lr},
            {"n_mesh_iters", n_mesh_iters},
            {"num_iterations", num_iterations},
            {"slot_dropout", slot_dropout},
            {"max_grad_norm", max_grad_norm},
            {"weight_decay", weight_decay},
            {"lr_decay", lr_decay},
            {"warmup_rate", warmup_rate},
            {"seed", seed},
            {"variant", variant == AttentionVariant::softmax ? "softmax" : "optimal_transport"},
            {"sinkhorn_epsilon", sinkhorn_epsilon},
            {"sinkhorn_max_iters", sinkhorn_max_iters},
            {"sinkhorn_tol", sinkhorn_tol},
            {"d_model", d_model}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  TrainConfig c;
  const json known = json::parse(c.to_json());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");
  }
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.num_generated_triples = j.value("num_generated_triples", c.num_generated_triples);
    c.encoder_lr = j.value("encoder_lr", c.encoder_lr);
    c.decoder_lr = j.value("decoder_lr", c.decoder_lr);
    c.mesh_lr = j.value("mesh_lr", c.mesh_lr);
    c.n_mesh_iters = j.value("n_mesh_iters", c.n_mesh_iters);
    c.num_iterations = j.value("num_iterations", c.num_iterations);
    c.slot_dropout = j.value("slot_dropout", c.slot_dropout);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.warmup_rate = j.value("warmup_rate", c.warmup_rate);
    c.seed = j.value("seed", c.seed);
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    c.sinkhorn_epsilon = j.value("sinkhorn_epsilon", c.sinkhorn_epsilon);
    c.sinkhorn_max_iters = j.value("sinkhorn_max_iters", c.sinkhorn_max_iters);
    c.sinkhorn_tol = j.value("sinkhorn_tol", c.sinkhorn_tol);
    c.d_model = j.value("d_model", c.d_model);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  return from_json(std::string(std::istreambuf_iterator<char>(is), {}));
}

void TrainConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write config " + path);
  os << to_json() << '\n';
}

double lr_schedule(long step, long total_steps, double base_lr, double warmup_rate, double lr_decay) {
  if (total_steps <= 0) return base_lr;
  step = std::clamp(step, 0L, total_steps);
  const double warmup = warmup_rate * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s < warmup) return base_lr * s / warmup;
  const double span = static_cast<double>(total_steps) - warmup;
  const double frac = span > 0 ? (s - warmup) / span : 1.0;
  return base_lr * (1.0 - (1.0 - lr_decay) * frac);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

void AdamW::step(std::span<Parameter* const> params, double encoder_lr, double decoder_lr) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) throw NumericError("non-finite gradient in " + p->name);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    auto [it, fresh] = state_.try_emplace(p);
    Moments& s = it->second;
    if (fresh) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    const double lr = p->group == ParamGroup::encoder ? encoder_lr : decoder_lr;
    s.m = opts_.beta1 * s.m + (1.0 - opts_.beta1) * p->grad;
    s.v = opts_.beta2 * s.v + (1.0 - opts_.beta2) * p->grad.cwiseAbs2();
    p->value *= 1.0 - lr * opts_.weight_decay;
    p->value.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + opts_.eps);
  }
}

void RunRecord::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write run record " + path);
  os << "epoch,train_loss,valid_f1_exact,valid_f1_partial,wall_seconds,sinkhorn_nonconverged\n";
  os.precision(10);
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.train_loss << ',' << e.valid_f1_exact << ',' << e.valid_f1_partial << ','
       << e.wall_seconds << ',' << e.sinkhorn_nonconverged << '\n';
  }
}

double accumulate_batch(Model& model, std::span<const TokenizedSentence> sentences,
                        std::span<const std::vector<GoldTriple>> golds, const SlotAttentionOptions& opts,
                        std::mt19937_64* rng, int* nonconverged) {
  if (sentences.size() != golds.size()) throw DimensionError("accumulate_batch: sentence/gold count mismatch");
  if (sentences.empty()) return 0.0;
  const double w = 1.0 / static_cast<double>(sentences.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    Tape tape;
    Forward f = forward(tape, model, sentences[i], opts, rng != nullptr, rng);
    if (nonconverged) *nonconverged += f.attention.sinkhorn_nonconverged;
    const Assignment a = hungarian(pairwise_cost(f.heads, golds[i]));
    Var loss = set_loss(f.heads, golds[i], a);
    if (!std::isfinite(loss.scalar())) throw NumericError("non-finite loss");
    tape.backward(ad::scale(loss, w));
    total += loss.scalar();
  }
  return total * w;
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> valid_set,
                  const RelationInventory& relations, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (config.num_classes != relations.size() + 1) {
    throw ConfigError("config: num_classes is " + std::to_string(config.num_classes) + " but the corpus has " +
                      std::to_string(relations.size()) + " relations plus NA");
  }
  if (train_set.empty()) throw ConfigError("training split is empty");
  std::vector<std::vector<std::string>> words;
  std::vector<std::vector<GoldTriple>> golds;
  for (const auto& ex : train_set) {
    if (ex.triple_count() > config.num_generated_triples) {
      throw ConfigError("config: a training sentence has " + std::to_string(ex.triple_count()) +
                        " triples, more than num_generated_triples");
    }
    words.push_back(ex.words);
    golds.push_back(ex.triples);
  }

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.model = Model::init(build_vocab(std::span<const std::vector<std::string>>(words)), relations,
                             config.d_model, config.num_generated_triples, rng);
  Model& model = result.model;
  std::vector<TokenizedSentence> sentences;
  for (const auto& w : words) sentences.push_back(tokenize(w, model.vocab));

  const auto params = model.parameters();
  AdamW optimizer({0.9, 0.999, 1e-8, config.weight_decay});
  const SlotAttentionOptions attn = config.attention();
  EvalOptions eval_opts;
  eval_opts.attention = attn;

  const long n = static_cast<long>(sentences.size());
  const long batches = (n + config.batch_size - 1) / config.batch_size;
  const long total_steps = batches * config.epochs;
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> best;
  result.best_f1 = -1.0;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (long b = 0; b < batches; ++b) {
      std::vector<TokenizedSentence> bs;
      std::vector<std::vector<GoldTriple>> bg;
      for (long i = b * config.batch_size; i < std::min(n, (b + 1) * config.batch_size); ++i) {
        bs.push_back(sentences[order[static_cast<std::size_t>(i)]]);
        bg.push_back(golds[order[static_cast<std::size_t>(i)]]);
      }
      for (Parameter* p : params) p->zero_grad();
      try {
        loss_sum += accumulate_batch(model, bs, bg, attn, &rng, &rec.sinkhorn_nonconverged) *
                    static_cast<double>(bs.size());
        clip_grad_norm(params, config.max_grad_norm);
        const long step = optimizer.steps() + 1;
        optimizer.step(params,
                       lr_schedule(step, total_steps, config.encoder_lr, config.warmup_rate, config.lr_decay),
                       lr_schedule(step, total_steps, config.decoder_lr, config.warmup_rate, config.lr_decay));
      } catch (const NumericError&) {
        if (hooks.on_numeric_failure) {
          std::string dump;
          for (const auto& s : bs) {
            for (std::size_t t = 1; t + 1 < s.tokens.size(); ++t) dump += (t > 1 ? " " : "") + s.tokens[t];
            dump += '\n';
          }
          hooks.on_numeric_failure(dump);
        }
        throw;
      }
    }
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (!valid_set.empty()) {
      const EvalReport r = evaluate(model, valid_set, eval_opts);
      rec.valid_f1_exact = r.overall.exact.f1();
      rec.valid_f1_partial = r.overall.partial.f1();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.record.epochs.push_back(rec);
    if (rec.valid_f1_exact > result.best_f1 || valid_set.empty()) {
      result.best_f1 = rec.valid_f1_exact;
      result.best_epoch = epoch;
      best.clear();
      for (const Parameter* p : params) best.push_back(p->value);
    }
    if (hooks.on_epoch && !hooks.on_epoch(rec)) break;
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

}  // namespace smarte
