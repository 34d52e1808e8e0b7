#include "smarte/encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smarte/gru.hpp"
#include "smarte/ops.hpp"

namespace smarte {

std::vector<std::string> whitespace_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (auto& t : tokens) add(t);
  if (size() < kNumSpecial || token(kPad) != "[PAD]" || token(kUnk) != "[UNK]" || token(kCls) != "[CLS]" ||
      token(kSep) != "[SEP]") {
    throw SchemaError("vocabulary must start with [PAD] [UNK] [CLS] [SEP]");
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, size());
  tokens_.push_back(token);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write vocabulary " + path);
  for (const auto& t : tokens_) os << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) tokens.push_back(line);
  return Vocabulary(std::move(tokens));
}

TokenizedSentence tokenize(std::span<const std::string> words, const Vocabulary& vocab) {
  TokenizedSentence s;
  s.tokens.reserve(words.size() + 2);
  s.ids.reserve(words.size() + 2);
  s.tokens.emplace_back("[CLS]");
  s.ids.push_back(Vocabulary::kCls);
  for (const auto& w : words) {
    s.tokens.push_back(w);
    s.ids.push_back(vocab.id(w));
  }
  s.tokens.emplace_back("[SEP]");
  s.ids.push_back(Vocabulary::kSep);
  return s;
}

Vocabulary build_vocab(std::span<const TokenizedSentence> corpus) {
  if (corpus.empty()) throw ContractError("build_vocab: empty corpus");
  Vocabulary v;
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const bool marker = (i == 0 || i + 1 == s.tokens.size()) &&
                          (s.tokens[i] == "[CLS]" || s.tokens[i] == "[SEP]");
      if (!marker) v.add(s.tokens[i]);
    }
  }
  return v;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences) {
  if (sentences.empty()) throw ContractError("build_vocab: empty corpus");
  Vocabulary v;
  for (const auto& s : sentences) {
    for (const auto& w : s) v.add(w);
  }
  return v;
}

Matrix sinusoidal_positions(int n, int d) {
  Matrix p(n, d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / d);
      p(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return p;
}

EncoderParams EncoderParams::init(int vocab_size, int d, std::mt19937_64& rng) {
  auto enc = [&](const char* name, Matrix m) { return Parameter(name, std::move(m), ParamGroup::encoder); };
  EncoderParams p;
  p.embedding = enc("encoder.embedding", uniform_init(vocab_size, d, d, rng));
  p.w_q = enc("encoder.w_q", uniform_init(d, d, d, rng));
  p.w_k = enc("encoder.w_k", uniform_init(d, d, d, rng));
  p.w_v = enc("encoder.w_v", uniform_init(d, d, d, rng));
  p.w_o = enc("encoder.w_o", uniform_init(d, d, d, rng));
  return p;
}

std::vector<Parameter*> EncoderParams::all() { return {&embedding, &w_q, &w_k, &w_v, &w_o}; }

Var encode(Tape& tape, const TokenizedSentence& sentence, EncoderParams& params) {
  using namespace ad;
  const int d = static_cast<int>(params.embedding.value.cols());
  Var x = add(gather_rows(tape.param(params.embedding), sentence.ids),
              tape.constant(sinusoidal_positions(sentence.n(), d)));
  Var q = matmul(x, tape.param(params.w_q));
  Var k = matmul(x, tape.param(params.w_k));
  Var v = matmul(x, tape.param(params.w_v));
  Var attn = softmax_rows(scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d))));
  Var mixed = matmul(matmul(attn, v), tape.param(params.w_o));
  return layer_norm_rows(add(x, mixed));
}

}  // namespace smarte
