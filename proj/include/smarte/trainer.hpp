#pragma once

// Optimization loop: seeded shuffling, per-sentence matching and loss,
// AdamW with two learning-rate groups, global-norm clipping and a linear
// warmup/decay schedule. Keeps the parameters of the best validation epoch.

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smarte/data.hpp"
#include "smarte/model.hpp"

namespace smarte {

struct TrainConfig {
  int batch_size = 8;
  int epochs = 50;
  int num_classes = 11;
  int num_generated_triples = 15;
  double encoder_lr = 1e-3;
  double decoder_lr = 2e-3;
  double mesh_lr = 6.0;
  int n_mesh_iters = 4;
  int num_iterations = 3;
  double slot_dropout = 0.2;
  double max_grad_norm = 2.5;
  double weight_decay = 1e-5;
  double lr_decay = 0.01;
  double warmup_rate = 0.1;
  unsigned long long seed = 42;
  AttentionVariant variant = AttentionVariant::optimal_transport;
  double sinkhorn_epsilon = 1.0;
  int sinkhorn_max_iters = 20;
  double sinkhorn_tol = 1e-6;
  int d_model = 64;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  SlotAttentionOptions attention() const;

  std::string to_json() const;
  /// Unknown keys are rejected; missing keys keep their defaults.
  static TrainConfig from_json(const std::string& text);
  static TrainConfig load(const std::string& path);
  void save(const std::string& path) const;
};

/// Linear warmup from 0 to base_lr over the first warmup_rate * total_steps
/// steps, then linear decay to lr_decay * base_lr at total_steps.
double lr_schedule(long step, long total_steps, double base_lr, double warmup_rate, double lr_decay);

/// Scales all gradients so their joint L2 norm is at most max_norm. Returns
/// the norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with decoupled weight decay. Moments are keyed by parameter address.
class AdamW {
 public:
  explicit AdamW(AdamOptions opts = {}) : opts_(opts) {}

  /// One update with per-group learning rates. Throws NumericError (and
  /// leaves every parameter untouched) if any gradient is non-finite.
  void step(std::span<Parameter* const> params, double encoder_lr, double decoder_lr);
  long steps() const { return t_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  AdamOptions opts_;
  long t_ = 0;
  std::unordered_map<const Parameter*, Moments> state_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_f1_exact = 0.0;
  double valid_f1_partial = 0.0;
  double wall_seconds = 0.0;
  int sinkhorn_nonconverged = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;

  void save_csv(const std::string& path) const;
};

struct TrainHooks {
  /// Called after every epoch; returning false stops training.
  std::function<bool(const EpochRecord&)> on_epoch;
  /// When set, receives the offending sentence text on a numeric failure.
  std::function<void(const std::string&)> on_numeric_failure;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  RunRecord record;
  int best_epoch = 0;
  double best_f1 = 0.0;
};

/// Mean set loss over a batch, accumulating parameter gradients.
double accumulate_batch(Model& model, std::span<const TokenizedSentence> sentences,
                        std::span<const std::vector<GoldTriple>> golds, const SlotAttentionOptions& opts,
                        std::mt19937_64* rng, int* nonconverged = nullptr);

/// Vocabulary from the training split, then training from scratch. Throws
/// ConfigError when num_classes does not match the relation inventory or a
/// training sentence has more triples than slots.
TrainResult train(std::span<const Example> train_set, std::span<const Example> valid_set,
                  const RelationInventory& relations, const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace smarte
