#pragma once

// Per-slot attention explanations: the k x n attention map of one refinement
// iteration, the triple each slot decodes to, and CSV / JSON / SVG exports.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smarte/data.hpp"
#include "smarte/model.hpp"

namespace smarte {

inline constexpr double kAttentionFloor = 1e-12;

struct Explanation {
  std::vector<std::string> tokens;  // n surface tokens, boundary markers included
  Matrix attention;                 // k x n
  int iteration = 0;                // 1-based
  std::vector<std::optional<DecodedTriple>> slots;

  /// log(max(a, kAttentionFloor)), elementwise.
  Matrix log_attention() const;
};

/// `iteration` 0 selects the final refinement step. Throws ConfigError when
/// it exceeds the configured number of iterations.
Explanation explain(Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts,
                    int iteration = 0, const DecodeOptions& decode_opts = {});

/// Indices of the `count` largest entries of `row`, largest first.
std::vector<int> top_tokens(const RowVector& row, int count = 5);

/// Header row of surface tokens, then one row per slot.
void write_attention_csv(const std::string& path, const Explanation& e);
Matrix read_attention_csv(const std::string& path, std::vector<std::string>* header = nullptr);

std::string explanation_json(const Explanation& e, const RelationInventory& relations);

/// Tokens along x, slots along y, colour = log attention. Slots that decode to
/// a triple get a highlighted frame, the triple in the margin and their five
/// most attended tokens numbered.
std::string render_heatmap_svg(const Explanation& e, const RelationInventory& relations);

/// Writes sentence_NNNN.{csv,json,svg} per example into `out_dir`.
void export_explanations(Model& model, std::span<const Example> examples, const std::string& out_dir,
                         const SlotAttentionOptions& opts, int iteration = 0, const DecodeOptions& decode_opts = {});

}  // namespace smarte
