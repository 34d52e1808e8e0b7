#pragma once

// Five-way structured readout per slot: subject start/end, object start/end
// (distributions over token positions) and relation (over t types + NA).

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "smarte/autodiff.hpp"

namespace smarte {

enum class SpanPart { subject_start = 0, subject_end = 1, object_start = 2, object_end = 3 };

struct SpanHeadParams {
  Parameter w_slot;   // d x d, applied to the slot
  Parameter w_token;  // d x d, applied to every token
  Parameter v;        // 1 x d projection to a logit
};

struct HeadParams {
  std::array<SpanHeadParams, 4> spans;
  Parameter w_rel;  // d x (t + 1); the last column is NA

  static HeadParams init(int d, int num_classes, std::mt19937_64& rng);
  static HeadParams zeros(int d, int num_classes);
  int num_classes() const { return static_cast<int>(w_rel.value.cols()); }
  int na_index() const { return num_classes() - 1; }
  std::vector<Parameter*> all();
};

/// Distributions for all k slots at once.
struct HeadOutput {
  std::array<Var, 4> spans;  // each k x n, indexed by SpanPart
  Var relation;              // k x (t + 1)
};

/// softmax_j(v^T tanh(W_slot z_i + W_token h_j)) for each of the four span parts.
std::array<Var, 4> predict_spans(const Var& slots, const Var& tokens, HeadParams& params);
/// softmax(z_i W_rel).
Var predict_relation(const Var& slots, HeadParams& params);
HeadOutput predict_heads(const Var& slots, const Var& tokens, HeadParams& params);

struct TriplePrediction {
  std::array<RowVector, 4> spans;
  RowVector relation;
  int slot_index = 0;
};

std::vector<TriplePrediction> slot_predictions(const HeadOutput& out);

struct DecodedTriple {
  int ss = 0, se = 0, os = 0, oe = 0;
  int relation = 0;
  double score = 0.0;
  int slot_index = 0;

  /// Identity ignores score and slot.
  friend bool operator==(const DecodedTriple& a, const DecodedTriple& b) {
    return a.ss == b.ss && a.se == b.se && a.os == b.os && a.oe == b.oe && a.relation == b.relation;
  }
};

struct DecodeOptions {
  /// Drop a triple with an inverted span instead of swapping its ends.
  bool discard_inverted = false;
};

/// Argmax readout; std::nullopt when the relation argmax is NA (the last class)
/// or when an inverted span is discarded. Boundary positions 0 and n-1 are
/// never chosen.
std::optional<DecodedTriple> decode(const TriplePrediction& pred, int n, const DecodeOptions& opts = {});

}  // namespace smarte
