#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxnmt/text.hpp"

namespace ctxnmt {

using TokenId = int;

/// Token <-> id bijection with fixed reserved ids.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumReserved = 4;

  Vocabulary();

  /// Keeps the `cap` most frequent tokens (reserved entries included in
  /// the cap; ties broken lexicographically). cap 0 means unlimited.
  static Vocabulary build(const std::vector<Tokens>& corpus, std::size_t cap = 0);
  /// Ordered token list as stored in checkpoints; the first four entries
  /// must be the reserved symbols.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  /// Unknown tokens map to kUnk.
  TokenId id(const std::string& token) const;

  std::vector<TokenId> encode(const Tokens& tokens) const;
  /// Drops BOS/EOS/PAD.
  Tokens decode(const std::vector<TokenId>& ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace ctxnmt
