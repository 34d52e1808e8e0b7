#pragma once

// Compact trainable sentence encoder: embedding lookup plus a sinusoidal
// position signal, one single-head self-attention mixer with a residual
// connection, and a non-affine layer normalization.

#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smarte/autodiff.hpp"

namespace smarte {

/// Splits on ASCII whitespace.
std::vector<std::string> whitespace_tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumSpecial = 4;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Id of `token`, or kUnk when it is not in the vocabulary.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void add(const std::string& token);

  /// One token per line; line number is the id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct TokenizedSentence {
  std::vector<std::string> tokens;  // includes [CLS] and [SEP]
  std::vector<int> ids;
  int n() const { return static_cast<int>(ids.size()); }
};

/// Wraps `words` in boundary markers; unknown words map to [UNK].
TokenizedSentence tokenize(std::span<const std::string> words, const Vocabulary& vocab);

/// Specials first, then body tokens in order of first appearance. Throws
/// ContractError on an empty corpus.
Vocabulary build_vocab(std::span<const TokenizedSentence> corpus);
Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences);

/// P[pos, 2i] = sin(pos / 10000^(2i/d)), P[pos, 2i+1] = cos(...).
Matrix sinusoidal_positions(int n, int d);

struct EncoderParams {
  Parameter embedding;  // vocab x d
  Parameter w_q, w_k, w_v, w_o;

  static EncoderParams init(int vocab_size, int d, std::mt19937_64& rng);
  std::vector<Parameter*> all();
};

/// H = LN(X + SelfAttn(X)), X = E[ids] + P. Throws LookupError for ids
/// outside the embedding table.
Var encode(Tape& tape, const TokenizedSentence& sentence, EncoderParams& params);

}  // namespace smarte
