#include "smarte/model.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace smarte {

using nlohmann::json;

Model Model::init(Vocabulary vocab, RelationInventory relations, int d, int k, std::mt19937_64& rng) {
  Model m;
  m.encoder = EncoderParams::init(vocab.size(), d, rng);
  m.slots = SlotAttentionParams::init(k, d, rng);
  m.heads = HeadParams::init(d, relations.size() + 1, rng);
  m.vocab = std::move(vocab);
  m.relations = std::move(relations);
  return m;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = encoder.all();
  for (Parameter* p : slots.all()) out.push_back(p);
  for (Parameter* p : heads.all()) out.push_back(p);
  return out;
}

Forward forward(Tape& tape, Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts,
                bool training, std::mt19937_64* rng) {
  Forward f;
  f.tokens = encode(tape, sentence, model.encoder);
  f.attention = run_slot_attention(f.tokens, tape.param(model.slots.slot_init), model.slots, opts, training, rng);
  f.heads = predict_heads(f.attention.slots, f.tokens, model.heads);
  return f;
}

std::vector<DecodedTriple> predict(Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts,
                                   const DecodeOptions& decode_opts) {
  Tape tape;
  Forward f = forward(tape, model, sentence, opts, false);
  std::vector<DecodedTriple> out;
  for (const auto& p : slot_predictions(f.heads)) {
    auto t = decode(p, sentence.n(), decode_opts);
    if (t && std::find(out.begin(), out.end(), *t) == out.end()) out.push_back(*t);
  }
  return out;
}

void save_checkpoint(const std::string& path, Model& model, const std::string& config_json) {
  json params = json::object();
  for (Parameter* p : model.parameters()) {
    params[p->name] = {{"shape", {p->value.rows(), p->value.cols()}},
                       {"values", std::vector<double>(p->value.data(), p->value.data() + p->value.size())}};
  }
  json doc = {{"format", "smarte-checkpoint-1"},
              {"config", json::parse(config_json.empty() ? "{}" : config_json)},
              {"relations", model.relations.names()},
              {"vocab", model.vocab.tokens()},
              {"params", params}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path);
  os.precision(17);
  os << doc.dump() << '\n';
  if (!os) throw IoError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("checkpoint " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "smarte-checkpoint-1") throw SchemaError("checkpoint: unknown format");
  try {
    Vocabulary vocab(doc.at("vocab").get<std::vector<std::string>>());
    RelationInventory relations(doc.at("relations").get<std::vector<std::string>>());
    const auto& params = doc.at("params");
    const auto& slot_shape = params.at("slots.init").at("shape");
    const int k = slot_shape.at(0).get<int>(), d = slot_shape.at(1).get<int>();
    std::mt19937_64 rng(0);
    Checkpoint ck{Model::init(std::move(vocab), std::move(relations), d, k, rng), doc.at("config").dump()};
    for (Parameter* p : ck.model.parameters()) {
      if (!params.contains(p->name)) throw SchemaError("checkpoint: missing parameter " + p->name);
      const auto& entry = params[p->name];
      const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = entry.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols() ||
          values.size() != static_cast<std::size_t>(p->value.size())) {
        throw SchemaError("checkpoint: parameter " + p->name + " has the wrong shape");
      }
      std::copy(values.begin(), values.end(), p->value.data());
    }
    return ck;
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace smarte
