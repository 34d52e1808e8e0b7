#pragma once

// Iterative slot refinement against token features, with either competitive
// softmax attention or an entropy-sharpened optimal-transport plan.

#include <random>
#include <string>
#include <vector>

#include "smarte/autodiff.hpp"
#include "smarte/gru.hpp"
#include "smarte/transport.hpp"

namespace smarte {

enum class AttentionVariant { softmax, optimal_transport };

std::string to_string(AttentionVariant v);
/// Accepts "softmax", "ot" and "optimal_transport".
AttentionVariant parse_variant(const std::string& s);

struct AttentionMap {
  Matrix weights;  // k x n
  AttentionVariant variant = AttentionVariant::softmax;
  int iteration = 0;  // 1-based refinement step that produced the map
};

struct MeshOptions {
  double lr = 6.0;
  int iters = 4;
};

struct SlotAttentionOptions {
  int iterations = 3;
  AttentionVariant variant = AttentionVariant::optimal_transport;
  SinkhornOptions sinkhorn{1.0, 20, 1e-6};
  MeshOptions mesh;
  double dropout = 0.2;
  /// Standardize slots before the query projection (classic slot attention).
  bool layer_norm = false;
};

struct SlotAttentionParams {
  Parameter slot_init;  // k x d learned initial slots
  Parameter w_q, w_k, w_v;
  GruParams gru;

  static SlotAttentionParams init(Eigen::Index k, Eigen::Index d, std::mt19937_64& rng);
  std::vector<Parameter*> all();
};

struct Qkv {
  Var q, k, v;
};

/// Q = Z W_Q, K = H W_K, V = H W_V.
Qkv project_qkv(const Var& slots, const Var& tokens, SlotAttentionParams& params);

/// Softmax of Q K^T / sqrt(d) over the slot axis, then each slot's row
/// renormalized over tokens.
Var softmax_attention(const Var& q, const Var& k);

namespace ad {

Var cosine_cost(const Var& q, const Var& k, double eps = 1e-8);

struct SinkhornStep {
  Var out;  // log-plan after this half-step
  bool rows = true;
  double log_target = 0.0;
};

struct SinkhornTrace {
  Var plan;
  Var log_plan;
  /// Half-steps up to and including the returned iterate.
  std::vector<SinkhornStep> steps;
  int iterations = 0;
  bool converged = false;
  double deviation = 0.0;
};

/// Differentiable log-domain Sinkhorn, unrolled over the executed iterations.
/// Same conventions and stopping rule as smarte::sinkhorn.
SinkhornTrace sinkhorn(const Var& cost, const SinkhornOptions& opts);

/// dH(sinkhorn(C))/dC, built from tape operations so that it can itself be
/// differentiated.
Var entropy_gradient(const Var& cost, const SinkhornOptions& opts, int* nonconverged = nullptr);

/// Gradient descent on the cost to lower the entropy of its transport plan:
/// C <- C - lr * dH(sinkhorn(C))/dC, repeated `iters` times.
Var mesh(const Var& cost, const MeshOptions& mesh, const SinkhornOptions& opts, int* nonconverged = nullptr);

}  // namespace ad

/// Value-only MESH.
Matrix mesh(const Matrix& cost, const MeshOptions& mesh, const SinkhornOptions& opts);

struct SlotAttentionOutput {
  Var slots;
  std::vector<AttentionMap> maps;
  int sinkhorn_nonconverged = 0;
};

/// Runs `opts.iterations` refinement steps starting from `init` (k x d).
/// Dropout is applied between steps only when `training` and `rng` is set.
SlotAttentionOutput run_slot_attention(const Var& tokens, const Var& init, SlotAttentionParams& params,
                                       const SlotAttentionOptions& opts, bool training,
                                       std::mt19937_64* rng = nullptr);

}  // namespace smarte
