#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctxnmt/text.hpp"

namespace ctxnmt {

struct BpeConfig {
  std::size_t num_merges = 300;
  bool joint = false;
  std::size_t vocab_threshold = 0;
  bool operator==(const BpeConfig&) const = default;
};

using SymbolPair = std::pair<std::string, std::string>;

/// Byte-pair-encoding model: ordered merges plus the subword vocabulary
/// (emitted forms, i.e. with join markers) counted over the learning corpus.
struct BpeModel {
  std::vector<SymbolPair> merges;
  std::map<std::string, std::size_t> subword_vocab;
  std::string eow_marker = "</w>";
  std::string join_marker = "@@";
  /// Tokens emitted whole: exact matches and anything carrying the prefix.
  std::vector<std::string> reserved_tokens{"_BREAK_"};
  std::string reserved_prefix = "cc_";

  bool is_reserved(std::string_view token) const;
  bool operator==(const BpeModel&) const = default;
};

/// Word-type counts of a whitespace-tokenized corpus; reserved tokens are skipped.
std::map<std::string, std::size_t> count_words(const std::vector<std::string>& lines,
                                               const BpeModel& conventions = {});

/// Iterated most-frequent-pair merging over the word-frequency table.
/// Equal pair counts are resolved by the lexicographically smallest
/// (left, right). Stops early when every word is a single symbol.
BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_frequencies,
                   std::size_t num_merges, const BpeModel& conventions = {});

/// Segmenter with precomputed merge ranks. Thread-safe for concurrent reads.
class BpeSegmenter {
 public:
  explicit BpeSegmenter(const BpeModel& model);

  /// Subwords of one token. Non-final pieces carry the join marker. Pieces
  /// whose vocabulary count is below `vocab_threshold` are split back along
  /// their merges; threshold 0 keeps every merge.
  Tokens apply(std::string_view token, std::size_t vocab_threshold) const;
  Tokens apply(const Tokens& tokens, std::size_t vocab_threshold) const;

  const BpeModel& model() const { return model_; }

 private:
  struct PairHash {
    std::size_t operator()(const SymbolPair& p) const {
      return std::hash<std::string>()(p.first) * 31 + std::hash<std::string>()(p.second);
    }
  };

  std::vector<std::string> merge_symbols(std::string_view token) const;
  void split_recursive(const std::string& symbol, bool final, std::size_t threshold,
                       Tokens& out) const;
  std::string emitted(const std::string& symbol, bool final) const;

  BpeModel model_;
  std::unordered_map<SymbolPair, std::size_t, PairHash> rank_;
  std::unordered_map<std::string, SymbolPair> origin_;
};

Tokens apply_bpe(const BpeModel& model, std::string_view token, std::size_t vocab_threshold);

/// Joins pieces ending in the join marker with their successor. Throws
/// MalformedDataError on a trailing piece that still carries the marker.
Tokens revert_bpe(const Tokens& subwords, std::string_view join_marker = "@@");

std::string serialize_bpe(const BpeModel& model);
BpeModel parse_bpe(const std::string& text, const std::string& origin = "<bpe>");
void save_bpe(const std::filesystem::path& path, const BpeModel& model);
BpeModel load_bpe(const std::filesystem::path& path);

}  // namespace ctxnmt
