#pragma once

// The full extractor: encoder, slot refinement and readout heads, plus
// parameter checkpoints.

#include <random>
#include <string>
#include <vector>

#include "smarte/data.hpp"
#include "smarte/encoder.hpp"
#include "smarte/heads.hpp"
#include "smarte/slot_attention.hpp"

namespace smarte {

struct Model {
  Vocabulary vocab;
  RelationInventory relations;
  EncoderParams encoder;
  SlotAttentionParams slots;
  HeadParams heads;

  static Model init(Vocabulary vocab, RelationInventory relations, int d, int k, std::mt19937_64& rng);

  int width() const { return static_cast<int>(heads.w_rel.value.rows()); }
  int num_slots() const { return static_cast<int>(slots.slot_init.value.rows()); }
  int num_classes() const { return heads.num_classes(); }
  std::vector<Parameter*> parameters();
};

struct Forward {
  Var tokens;
  SlotAttentionOutput attention;
  HeadOutput heads;
};

Forward forward(Tape& tape, Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts,
                bool training, std::mt19937_64* rng = nullptr);

/// Decoded, deduplicated triples for one sentence.
std::vector<DecodedTriple> predict(Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts,
                                   const DecodeOptions& decode_opts = {});

/// JSON document:
///   {"format": "smarte-checkpoint-1", "config": {...}, "relations": [...],
///    "vocab": [...], "params": {name: {"shape": [r, c], "values": [...]}}}
/// with values in row-major order. `config_json` is stored verbatim.
void save_checkpoint(const std::string& path, Model& model, const std::string& config_json);

struct Checkpoint {
  Model model;
  std::string config_json;
};

/// Throws IoError when the file is missing and SchemaError when parameters
/// are missing or mis-shaped.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace smarte
