#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ctxnmt/text.hpp"

namespace ctxnmt {

// --- automatic metrics ----------------------------------------------------

struct BleuScore {
  double score = 0.0;
  std::array<double, 4> precisions{};
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
};

/// Corpus BLEU: clipped n-gram precisions for n = 1..4, flat weights,
/// exponential brevity penalty, no smoothing.
BleuScore bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

struct ChrFScore {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double beta = 3.0;
  std::size_t max_n = 6;
};

/// Character n-gram F-score over each sentence's code points, tokens
/// joined by single spaces. Matches and totals are summed over the corpus
/// per order; precision and recall are averaged over the orders that
/// occur on either side.
ChrFScore chrf(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
               double beta = 3.0, std::size_t max_n = 6);

struct ExtendedScores {
  BleuScore bleu;
  ChrFScore chrf;
};

/// Scores sliding-window concatenations: each unit is paired with up to
/// `window - 1` preceding units of its own document, break tokens removed.
ExtendedScores score_extended(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                              const std::vector<std::string>& doc_ids, std::size_t window = 2,
                              const std::string& break_token = "_BREAK_");

/// Builds the concatenated segments score_extended evaluates.
std::vector<Tokens> sliding_concatenation(const std::vector<Tokens>& units,
                                          const std::vector<std::string>& doc_ids, std::size_t window,
                                          const std::string& break_token);

// --- pronoun evaluation ---------------------------------------------------

enum class PronounCategory { PoliteImperative, PoliteOther, FemSingular, Plural, Unknown };
inline constexpr std::size_t kNumPronounCategories = 5;
std::string to_string(PronounCategory c);

enum class PronounClass { You, Fem, It, Plural, Masc };
std::optional<PronounClass> pronoun_class(const std::string& token);

/// Optional hint about the antecedent's number, consulted for "it".
enum class AntecedentCue { None, Singular, Plural };

struct PronounJudgment {
  bool correct = false;
  bool untranslated = false;
};

struct PronounOccurrence {
  Tokens source;
  std::size_t position = 0;  // index of the pronoun in `source`
  Tokens reference;
  std::vector<Tokens> systems;
  AntecedentCue cue = AntecedentCue::None;
  PronounCategory category = PronounCategory::Unknown;
  std::vector<PronounJudgment> judgments;  // one per system
};

/// Every case-insensitive occurrence of `pronoun` in the source.
std::vector<PronounOccurrence> find_occurrences(const Tokens& source, const Tokens& reference,
                                                const std::vector<Tokens>& systems,
                                                const std::string& pronoun = "sie");

/// Rule cascade on the reference translation. A lowercase pronoun that
/// does not start a clause cannot be the polite form, so the polite rules
/// are skipped for it.
PronounCategory categorize_pronoun(const PronounOccurrence& occurrence);

/// Pronoun class a correct translation must contain, if any.
std::optional<PronounClass> expected_class(const PronounOccurrence& occurrence);

/// Automatic judgment by pronoun-class match against the reference.
/// Imperatives must come out without a third-person pronoun. Empty or
/// unchanged outputs count as wrong and are flagged untranslated.
PronounJudgment judge_pronoun(const PronounOccurrence& occurrence, const Tokens& output);

/// Fills category and judgments in place.
void evaluate_occurrences(std::vector<PronounOccurrence>& occurrences);

struct AccuracyCell {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> accuracy() const;  // empty when total == 0
};

struct PronounTable {
  std::size_t num_systems = 0;
  // rows[category][system]
  std::array<std::vector<AccuracyCell>, kNumPronounCategories> rows;
  std::vector<AccuracyCell> total;              // excludes UNKNOWN
  std::vector<AccuracyCell> total_with_unknown;
  std::vector<std::size_t> untranslated;
};

PronounTable pronoun_accuracy(const std::vector<PronounOccurrence>& occurrences, std::size_t num_systems);

/// Occurrences of the most frequent expected pronoun class and the number
/// of occurrences overall: the accuracy of always answering the majority.
struct MajorityRate {
  std::size_t majority = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(majority) / static_cast<double>(total) : 0.0; }
};
MajorityRate majority_class_rate(const std::vector<PronounOccurrence>& occurrences, bool include_unknown = true);

std::string format_pronoun_table(const PronounTable& table, const std::vector<std::string>& system_names);

/// One TSV row per occurrence and system for manual adjudication.
std::string adjudication_export(const std::vector<PronounOccurrence>& occurrences,
                                const std::vector<std::string>& system_names);

// --- significance ---------------------------------------------------------

struct ChiSquareResult {
  double statistic = 0.0;
  bool significant = false;  // p < 0.05, one degree of freedom
};

/// Pearson chi-square on a 2x2 table without continuity correction.
/// Throws InputError when a row or column total is zero.
ChiSquareResult chi_square_2x2(std::size_t correct_a, std::size_t wrong_a, std::size_t correct_b,
                               std::size_t wrong_b);

inline constexpr double kChiSquareCritical05 = 3.841;

// --- reports --------------------------------------------------------------

struct SystemScores {
  std::string name;
  BleuScore bleu;
  ChrFScore chrf;
};

/// system, BLEU, chrF3, precision, recall; scores times 100, 2 decimals.
std::string format_score_table(const std::vector<SystemScores>& systems);

}  // namespace ctxnmt
