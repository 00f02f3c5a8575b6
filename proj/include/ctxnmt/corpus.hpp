#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctxnmt/text.hpp"

namespace ctxnmt {

/// One aligned source/target segment pair with its document position.
struct TranslationUnit {
  Tokens source;
  Tokens target;
  std::string doc_id;
  std::size_t index_in_doc = 0;

  bool operator==(const TranslationUnit&) const = default;
};

enum class Marking { Prefix, Break };

struct ContextConfig {
  std::size_t source_window = 0;
  std::size_t target_window = 0;
  Marking marking = Marking::Break;
  std::string context_prefix = "cc_";
  std::string break_token = "_BREAK_";

  /// Throws ConfigError when the combination is not one the models use
  /// (target context requires break marking).
  void validate() const;

  static ContextConfig baseline();
  static ContextConfig two_plus_one_prefix();
  static ContextConfig two_plus_one_break();
  static ContextConfig two_plus_two();
  /// Accepts "baseline", "2+1-prefix", "2+1-break", "2+2".
  static ContextConfig from_mode(const std::string& mode);

  bool operator==(const ContextConfig&) const = default;
};

std::string to_string(Marking marking);
Marking parse_marking(const std::string& text);

struct Origin {
  std::string doc_id;
  std::size_t index_in_doc = 0;
  bool operator==(const Origin&) const = default;
};

/// A context-extended instance. Focus offsets and break positions are
/// recorded explicitly so downstream analysis never re-parses markings.
struct ExtendedExample {
  Tokens source;
  Tokens target;
  std::size_t source_focus_start = 0;
  std::size_t target_focus_start = 0;
  std::vector<std::size_t> source_breaks;
  std::vector<std::size_t> target_breaks;
  Origin origin;

  bool operator==(const ExtendedExample&) const = default;
};

enum class Side { Source, Target };

/// PREFIX prepends `prefix` to every token; BREAK is the identity.
Tokens mark_context(const Tokens& tokens, Marking marking, const std::string& prefix);

/// Sliding-window extension. Each document restarts with empty context;
/// context units are concatenated oldest first. Throws MalformedDataError
/// when documents are interleaved or index_in_doc is not 0,1,2,...
std::vector<ExtendedExample> extend_corpus(const std::vector<TranslationUnit>& units,
                                           const ContextConfig& config);

/// The focus segment of an example (tokens from the recorded focus start).
Tokens extract_focus(const ExtendedExample& example, Side side);

/// Checks grouping and index consecutiveness; throws MalformedDataError.
void validate_corpus(const std::vector<TranslationUnit>& units);

// On-disk corpora: <stem>.src, <stem>.trg, <stem>.docs, plus <stem>.geom
// for extended corpora (focus offsets and break positions per line).

std::vector<TranslationUnit> read_corpus(const std::filesystem::path& source,
                                         const std::filesystem::path& target,
                                         const std::filesystem::path& docs);
void write_corpus(const std::filesystem::path& stem, const std::vector<TranslationUnit>& units);

void write_extended(const std::filesystem::path& stem, const std::vector<ExtendedExample>& examples);
std::vector<ExtendedExample> read_extended(const std::filesystem::path& stem);

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix);

// --- synthetic pronoun corpus ---------------------------------------------

enum class NounClass { Fem = 0, Masc = 1, Neut = 2, Plural = 3 };
inline constexpr std::size_t kNumNounClasses = 4;

std::string to_string(NounClass c);

struct LexiconEntry {
  std::string source_noun;
  std::string target_noun;
  NounClass noun_class = NounClass::Fem;
};

struct SynthSpec {
  std::size_t num_docs = 0;
  std::size_t units_per_doc = 10;
  std::vector<LexiconEntry> lexicon;
  /// Target pronoun per noun class, indexed by NounClass.
  std::array<std::string, kNumNounClasses> pronoun_for_class;
  /// Ambiguous source pronoun used for every class.
  std::string source_pronoun = "sie";
  std::uint64_t rng_seed = 0;

  /// Default German/English lexicon, five nouns per class, object pronouns.
  static SynthSpec standard(std::size_t num_docs, std::size_t units_per_doc, std::uint64_t seed);
  void validate() const;
};

/// Documents alternate antecedent units and pronoun units: even positions
/// introduce a noun, odd positions refer back to it with the ambiguous
/// source pronoun, whose target form depends only on the noun's class.
std::vector<TranslationUnit> generate_synthetic_corpus(const SynthSpec& spec);

}  // namespace ctxnmt
