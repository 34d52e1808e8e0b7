#include "smarte/slot_attention.hpp"

#include <cmath>

#include "smarte/ops.hpp"

namespace smarte {

std::string to_string(AttentionVariant v) {
  return v == AttentionVariant::softmax ? "softmax" : "ot";
}

AttentionVariant parse_variant(const std::string& s) {
  if (s == "softmax") return AttentionVariant::softmax;
  if (s == "ot" || s == "optimal_transport") return AttentionVariant::optimal_transport;
  throw ConfigError("unknown attention variant '" + s + "' (expected softmax or ot)");
}

SlotAttentionParams SlotAttentionParams::init(Eigen::Index k, Eigen::Index d, std::mt19937_64& rng) {
  SlotAttentionParams p;
  p.slot_init = Parameter("slots.init", uniform_init(k, d, d, rng));
  p.w_q = Parameter("slots.w_q", uniform_init(d, d, d, rng));
  p.w_k = Parameter("slots.w_k", uniform_init(d, d, d, rng));
  p.w_v = Parameter("slots.w_v", uniform_init(d, d, d, rng));
  p.gru = GruParams::init(d, rng, "slots.gru");
  return p;
}

std::vector<Parameter*> SlotAttentionParams::all() {
  std::vector<Parameter*> out{&slot_init, &w_q, &w_k, &w_v};
  for (Parameter* g : gru.all()) out.push_back(g);
  return out;
}

Qkv project_qkv(const Var& slots, const Var& tokens, SlotAttentionParams& params) {
  if (slots.cols() != tokens.cols()) throw DimensionError("project_qkv: slot and token widths differ");
  Tape& t = *slots.tape();
  return {ad::matmul(slots, t.param(params.w_q)), ad::matmul(tokens, t.param(params.w_k)),
          ad::matmul(tokens, t.param(params.w_v))};
}

Var softmax_attention(const Var& q, const Var& k) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var logits = ad::scale(ad::matmul_nt(q, k), inv_sqrt_d);
  return ad::normalize_rows(ad::softmax_cols(logits), 1e-8);
}

namespace ad {

Var cosine_cost(const Var& q, const Var& k, double eps) {
  if (q.cols() != k.cols()) throw DimensionError("cosine_cost: width mismatch");
  return matmul_nt(l2_normalize_rows(q, eps), l2_normalize_rows(k, eps));
}

SinkhornTrace sinkhorn(const Var& cost, const SinkhornOptions& opts) {
  if (cost.value().size() == 0) throw DimensionError("sinkhorn: empty cost matrix");
  if (!(opts.epsilon > 0)) throw ConfigError("sinkhorn: epsilon must be positive");
  if (opts.max_iters < 1) throw ConfigError("sinkhorn: max_iters must be >= 1");
  check_finite(cost.value(), "sinkhorn cost");

  const double log_col_target = std::log(static_cast<double>(cost.rows()) / static_cast<double>(cost.cols()));
  Var f = scale(cost, 1.0 / opts.epsilon);
  std::vector<SinkhornStep> steps;
  SinkhornTrace best;
  best.deviation = std::numeric_limits<double>::infinity();
  std::size_t best_len = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    f = log_normalize_rows(f, 0.0);
    steps.push_back({f, true, 0.0});
    f = log_normalize_cols(f, log_col_target);
    steps.push_back({f, false, log_col_target});

    const Matrix plan = f.value().array().exp();
    const double dev = max_marginal_deviation(plan);
    if (dev <= best.deviation) {
      best.log_plan = f;
      best.deviation = dev;
      best_len = steps.size();
    }
    best.iterations = it;
    if (dev < opts.tol) {
      best.converged = true;
      break;
    }
  }
  steps.resize(best_len);
  best.steps = std::move(steps);
  best.plan = exp(best.log_plan);
  return best;
}

Var entropy_gradient(const Var& cost, const SinkhornOptions& opts, int* nonconverged) {
  SinkhornTrace trace = sinkhorn(cost, opts);
  if (!trace.converged && nonconverged != nullptr) ++*nonconverged;
  // H = -sum A f with A = exp(f), so dH/df = -A (f + 1).
  Var g = scale(mul(trace.plan, add_scalar(trace.log_plan, 1.0)), -1.0);
  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    Var p = exp(add_scalar(it->out, -it->log_target));
    g = it->rows ? sub(g, mul_colvec(p, row_sums(g))) : sub(g, mul_rowvec(p, col_sums(g)));
  }
  return scale(g, 1.0 / opts.epsilon);
}

Var mesh(const Var& cost, const MeshOptions& mesh, const SinkhornOptions& opts, int* nonconverged) {
  if (mesh.iters < 0) throw ConfigError("mesh: negative iteration count");
  if (mesh.iters == 0 || mesh.lr == 0.0) return cost;
  Var c = cost;
  for (int it = 0; it < mesh.iters; ++it) {
    Var g = entropy_gradient(c, opts, nonconverged);
    check_finite(g.value(), "mesh gradient", it);
    c = sub(c, scale(g, mesh.lr));
    check_finite(c.value(), "mesh cost", it);
  }
  return c;
}

}  // namespace ad

Matrix mesh(const Matrix& cost, const MeshOptions& mesh, const SinkhornOptions& opts) {
  Tape tape;
  return ad::mesh(tape.constant(cost), mesh, opts).value();
}

SlotAttentionOutput run_slot_attention(const Var& tokens, const Var& init, SlotAttentionParams& params,
                                       const SlotAttentionOptions& opts, bool training, std::mt19937_64* rng) {
  if (opts.iterations < 1) throw ConfigError("run_slot_attention: iterations must be >= 1");
  if (init.cols() != tokens.cols()) throw DimensionError("run_slot_attention: slot and token widths differ");
  Tape& t = *tokens.tape();
  Var k = ad::matmul(tokens, t.param(params.w_k));
  Var v = ad::matmul(tokens, t.param(params.w_v));

  SlotAttentionOutput out;
  Var z = init;
  for (int l = 1; l <= opts.iterations; ++l) {
    Var zq = opts.layer_norm ? ad::layer_norm_rows(z) : z;
    Var q = ad::matmul(zq, t.param(params.w_q));
    Var attn;
    if (opts.variant == AttentionVariant::softmax) {
      attn = softmax_attention(q, k);
    } else {
      Var cost = ad::cosine_cost(q, k);
      Var sharpened = ad::mesh(cost, opts.mesh, opts.sinkhorn, &out.sinkhorn_nonconverged);
      ad::SinkhornTrace trace = ad::sinkhorn(sharpened, opts.sinkhorn);
      if (!trace.converged) ++out.sinkhorn_nonconverged;
      attn = trace.plan;
    }
    check_finite(attn.value(), "slot attention map", l);
    out.maps.push_back({attn.value(), opts.variant, l});
    z = gru_cell(z, ad::matmul(attn, v), params.gru);
    if (training && rng != nullptr && opts.dropout > 0.0 && l < opts.iterations) {
      std::bernoulli_distribution keep(1.0 - opts.dropout);
      Matrix mask(z.rows(), z.cols());
      const double s = 1.0 / (1.0 - opts.dropout);
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? s : 0.0;
      z = ad::mul_const(z, mask);
    }
  }
  out.slots = z;
  return out;
}

}  // namespace smarte
