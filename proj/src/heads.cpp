#include "smarte/heads.hpp"

#include <limits>
#include <string>
#include <utility>

#include "smarte/gru.hpp"
#include "smarte/ops.hpp"

namespace smarte {

namespace {
const char* kPartNames[4] = {"ss", "se", "os", "oe"};
}

HeadParams HeadParams::init(int d, int num_classes, std::mt19937_64& rng) {
  HeadParams p;
  for (int i = 0; i < 4; ++i) {
    const std::string base = std::string("heads.") + kPartNames[i];
    p.spans[i].w_slot = Parameter(base + ".w_slot", uniform_init(d, d, d, rng));
    p.spans[i].w_token = Parameter(base + ".w_token", uniform_init(d, d, d, rng));
    p.spans[i].v = Parameter(base + ".v", uniform_init(1, d, d, rng));
  }
  p.w_rel = Parameter("heads.w_rel", uniform_init(d, num_classes, d, rng));
  return p;
}

HeadParams HeadParams::zeros(int d, int num_classes) {
  HeadParams p;
  for (int i = 0; i < 4; ++i) {
    const std::string base = std::string("heads.") + kPartNames[i];
    p.spans[i].w_slot = Parameter(base + ".w_slot", Matrix::Zero(d, d));
    p.spans[i].w_token = Parameter(base + ".w_token", Matrix::Zero(d, d));
    p.spans[i].v = Parameter(base + ".v", Matrix::Zero(1, d));
  }
  p.w_rel = Parameter("heads.w_rel", Matrix::Zero(d, num_classes));
  return p;
}

std::vector<Parameter*> HeadParams::all() {
  std::vector<Parameter*> out;
  for (auto& s : spans) {
    out.push_back(&s.w_slot);
    out.push_back(&s.w_token);
    out.push_back(&s.v);
  }
  out.push_back(&w_rel);
  return out;
}

std::array<Var, 4> predict_spans(const Var& slots, const Var& tokens, HeadParams& params) {
  const auto d = params.w_rel.value.rows();
  if (slots.cols() != d || tokens.cols() != d) throw DimensionError("predict_spans: width mismatch");
  Tape& t = *slots.tape();
  std::array<Var, 4> out;
  for (int i = 0; i < 4; ++i) {
    SpanHeadParams& h = params.spans[i];
    Var zw = ad::matmul(slots, t.param(h.w_slot));
    Var hw = ad::matmul(tokens, t.param(h.w_token));
    out[i] = ad::softmax_rows(ad::additive_scores(zw, hw, t.param(h.v)));
  }
  return out;
}

Var predict_relation(const Var& slots, HeadParams& params) {
  if (slots.cols() != params.w_rel.value.rows()) throw DimensionError("predict_relation: width mismatch");
  return ad::softmax_rows(ad::matmul(slots, slots.tape()->param(params.w_rel)));
}

HeadOutput predict_heads(const Var& slots, const Var& tokens, HeadParams& params) {
  return {predict_spans(slots, tokens, params), predict_relation(slots, params)};
}

std::vector<TriplePrediction> slot_predictions(const HeadOutput& out) {
  const auto k = out.relation.rows();
  std::vector<TriplePrediction> preds(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    auto& p = preds[static_cast<std::size_t>(i)];
    for (int s = 0; s < 4; ++s) p.spans[s] = out.spans[s].value().row(i);
    p.relation = out.relation.value().row(i);
    p.slot_index = static_cast<int>(i);
  }
  return preds;
}

std::optional<DecodedTriple> decode(const TriplePrediction& pred, int n, const DecodeOptions& opts) {
  const auto na = pred.relation.size() - 1;
  Eigen::Index rel = 0;
  const double p_rel = pred.relation.maxCoeff(&rel);
  if (rel == na) return std::nullopt;

  std::array<int, 4> pos{};
  double score = p_rel;
  for (int s = 0; s < 4; ++s) {
    const RowVector& p = pred.spans[s];
    // Positions 0 and n-1 hold [CLS]/[SEP]; for n <= 2 there is no body to choose.
    int best = n > 2 ? 1 : 0;
    for (int j = 1; j < n - 1; ++j) {
      if (p(j) > p(best)) best = j;
    }
    pos[s] = best;
    score *= p(best);
  }
  DecodedTriple t{pos[0], pos[1], pos[2], pos[3], static_cast<int>(rel), score, pred.slot_index};
  if (t.se < t.ss || t.oe < t.os) {
    if (opts.discard_inverted) return std::nullopt;
    if (t.se < t.ss) std::swap(t.ss, t.se);
    if (t.oe < t.os) std::swap(t.os, t.oe);
  }
  return t;
}

}  // namespace smarte
