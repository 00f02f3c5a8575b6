#include "ctxnmt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "ctxnmt/error.hpp"

namespace ctxnmt {

namespace {

void check_lengths(std::size_t h, std::size_t r, const char* metric) {
  if (h != r) {
    throw InputError(std::string(metric) + ": " + std::to_string(h) + " hypotheses vs " + std::to_string(r) +
                     " references");
  }
}

template <typename Seq>
std::map<Seq, std::size_t> ngram_counts(const std::vector<typename Seq::value_type>& items, std::size_t n) {
  std::map<Seq, std::size_t> counts;
  if (items.size() < n) return counts;
  for (std::size_t i = 0; i + n <= items.size(); ++i) {
    ++counts[Seq(items.begin() + static_cast<std::ptrdiff_t>(i),
                 items.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <typename Seq>
std::size_t clipped_matches(const std::map<Seq, std::size_t>& hyp, const std::map<Seq, std::size_t>& ref) {
  std::size_t m = 0;
  for (const auto& [gram, c] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

std::size_t total_count(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

}  // namespace

BleuScore bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  check_lengths(hypotheses.size(), references.size(), "bleu");
  BleuScore s;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const auto& h = hypotheses[k];
    const auto& r = references[k];
    s.hypothesis_length += h.size();
    s.reference_length += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      s.matches[n - 1] += clipped_matches(ngram_counts<Tokens>(h, n), ngram_counts<Tokens>(r, n));
      s.totals[n - 1] += total_count(h.size(), n);
    }
  }
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    s.precisions[n] = s.totals[n] ? static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]) : 0.0;
    if (s.precisions[n] == 0.0) zero = true;
    else log_sum += std::log(s.precisions[n]);
  }
  if (s.hypothesis_length == 0) {
    s.brevity_penalty = 0.0;
  } else if (s.hypothesis_length >= s.reference_length) {
    s.brevity_penalty = 1.0;
  } else {
    s.brevity_penalty = std::exp(1.0 - static_cast<double>(s.reference_length) /
                                           static_cast<double>(s.hypothesis_length));
  }
  s.score = zero ? 0.0 : s.brevity_penalty * std::exp(log_sum / 4.0);
  return s;
}

ChrFScore chrf(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, double beta,
               std::size_t max_n) {
  check_lengths(hypotheses.size(), references.size(), "chrf");
  if (max_n == 0) throw InputError("chrf: max_n must be at least 1");
  using Chars = std::vector<std::string>;
  std::vector<std::size_t> matches(max_n, 0), hyp_total(max_n, 0), ref_total(max_n, 0);
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const Chars h = utf8_chars(join_tokens(hypotheses[k]));
    const Chars r = utf8_chars(join_tokens(references[k]));
    for (std::size_t n = 1; n <= max_n; ++n) {
      matches[n - 1] += clipped_matches(ngram_counts<Chars>(h, n), ngram_counts<Chars>(r, n));
      hyp_total[n - 1] += total_count(h.size(), n);
      ref_total[n - 1] += total_count(r.size(), n);
    }
  }
  ChrFScore s;
  s.beta = beta;
  s.max_n = max_n;
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (hyp_total[n] == 0 && ref_total[n] == 0) continue;
    ++orders;
    if (hyp_total[n]) p_sum += static_cast<double>(matches[n]) / static_cast<double>(hyp_total[n]);
    if (ref_total[n]) r_sum += static_cast<double>(matches[n]) / static_cast<double>(ref_total[n]);
  }
  if (orders == 0) return s;
  s.precision = p_sum / static_cast<double>(orders);
  s.recall = r_sum / static_cast<double>(orders);
  const double b2 = beta * beta;
  const double denom = b2 * s.precision + s.recall;
  s.score = denom > 0.0 ? (1.0 + b2) * s.precision * s.recall / denom : 0.0;
  return s;
}

std::vector<Tokens> sliding_concatenation(const std::vector<Tokens>& units, const std::vector<std::string>& doc_ids,
                                          std::size_t window, const std::string& break_token) {
  if (units.size() != doc_ids.size()) throw InputError("score_extended: units and document ids differ in length");
  if (window == 0) throw InputError("score_extended: window must be at least 1");
  std::vector<Tokens> out;
  out.reserve(units.size());
  std::size_t doc_start = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0 && doc_ids[i] != doc_ids[i - 1]) doc_start = i;
    const std::size_t first = std::max(doc_start, i + 1 >= window ? i + 1 - window : 0);
    Tokens seg;
    for (std::size_t j = first; j <= i; ++j) {
      for (const auto& t : units[j]) {
        if (t != break_token) seg.push_back(t);
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

ExtendedScores score_extended(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                              const std::vector<std::string>& doc_ids, std::size_t window,
                              const std::string& break_token) {
  check_lengths(hypotheses.size(), references.size(), "score_extended");
  const auto h = sliding_concatenation(hypotheses, doc_ids, window, break_token);
  const auto r = sliding_concatenation(references, doc_ids, window, break_token);
  return {bleu(h, r), chrf(h, r)};
}

// --- pronouns -------------------------------------------------------------

std::string to_string(PronounCategory c) {
  switch (c) {
    case PronounCategory::PoliteImperative: return "polite imperative";
    case PronounCategory::PoliteOther: return "polite other";
    case PronounCategory::FemSingular: return "feminine singular";
    case PronounCategory::Plural: return "plural";
    case PronounCategory::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<PronounClass> pronoun_class(const std::string& token) {
  static const std::map<std::string, PronounClass> table = {
      {"you", PronounClass::You},     {"she", PronounClass::Fem},     {"her", PronounClass::Fem},
      {"it", PronounClass::It},       {"they", PronounClass::Plural}, {"them", PronounClass::Plural},
      {"em", PronounClass::Plural},   {"he", PronounClass::Masc},     {"him", PronounClass::Masc},
  };
  auto it = table.find(lowercase(token));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

namespace {

bool has_class(const Tokens& tokens, PronounClass c) {
  return std::any_of(tokens.begin(), tokens.end(), [c](const std::string& t) { return pronoun_class(t) == c; });
}

bool has_any_pronoun(const Tokens& tokens) {
  return std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) { return pronoun_class(t).has_value(); });
}

bool is_third_person(PronounClass c) { return c != PronounClass::You; }

bool is_clause_boundary(const std::string& token) {
  static const char* const marks[] = {".", "!", "?", ",", ";", ":", "-", "\"", "...", "(", ")"};
  return std::any_of(std::begin(marks), std::end(marks), [&](const char* m) { return token == m; });
}

/// Index of the first token of the clause containing `pos`.
std::size_t clause_start(const Tokens& source, std::size_t pos) {
  std::size_t s = pos;
  while (s > 0 && !is_clause_boundary(source[s - 1])) --s;
  return s;
}

bool starts_uppercase(const std::string& token) {
  return !token.empty() && token[0] >= 'A' && token[0] <= 'Z';
}

}  // namespace

std::vector<PronounOccurrence> find_occurrences(const Tokens& source, const Tokens& reference,
                                                const std::vector<Tokens>& systems, const std::string& pronoun) {
  std::vector<PronounOccurrence> out;
  const std::string needle = lowercase(pronoun);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (lowercase(source[i]) != needle) continue;
    PronounOccurrence occ;
    occ.source = source;
    occ.position = i;
    occ.reference = reference;
    occ.systems = systems;
    out.push_back(std::move(occ));
  }
  return out;
}

PronounCategory categorize_pronoun(const PronounOccurrence& occ) {
  if (occ.position >= occ.source.size()) throw InputError("pronoun occurrence position out of range");
  const auto& token = occ.source[occ.position];
  const std::size_t start = clause_start(occ.source, occ.position);
  const bool clause_initial = start == occ.position;
  const bool may_be_polite = starts_uppercase(token) || clause_initial;
  const auto& ref = occ.reference;

  if (may_be_polite) {
    const bool imperative_shape = starts_uppercase(token) && occ.position == start + 1;
    if (!has_any_pronoun(ref) && imperative_shape) return PronounCategory::PoliteImperative;
    if (has_class(ref, PronounClass::You)) return PronounCategory::PoliteOther;
  }
  if (has_class(ref, PronounClass::Fem)) return PronounCategory::FemSingular;
  if (has_class(ref, PronounClass::It) && occ.cue != AntecedentCue::Plural) return PronounCategory::FemSingular;
  if (has_class(ref, PronounClass::Plural)) return PronounCategory::Plural;
  return PronounCategory::Unknown;
}

std::optional<PronounClass> expected_class(const PronounOccurrence& occ) {
  const auto& ref = occ.reference;
  switch (occ.category) {
    case PronounCategory::PoliteImperative: return std::nullopt;
    case PronounCategory::PoliteOther: return PronounClass::You;
    case PronounCategory::FemSingular:
      return has_class(ref, PronounClass::Fem) ? PronounClass::Fem : PronounClass::It;
    case PronounCategory::Plural: return PronounClass::Plural;
    case PronounCategory::Unknown:
      for (auto c : {PronounClass::Masc, PronounClass::It, PronounClass::You}) {
        if (has_class(ref, c)) return c;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

PronounJudgment judge_pronoun(const PronounOccurrence& occ, const Tokens& output) {
  PronounJudgment j;
  auto lower = [](const Tokens& t) {
    Tokens out;
    for (const auto& x : t) out.push_back(lowercase(x));
    return out;
  };
  if (output.empty() || lower(output) == lower(occ.source)) {
    j.untranslated = true;
    return j;
  }
  const auto expected = expected_class(occ);
  if (occ.category == PronounCategory::PoliteImperative) {
    j.correct = std::none_of(output.begin(), output.end(), [](const std::string& t) {
      auto c = pronoun_class(t);
      return c && is_third_person(*c);
    });
    return j;
  }
  if (!expected) {
    j.correct = !has_any_pronoun(output);
    return j;
  }
  bool conflict = false;
  for (auto c : {PronounClass::Fem, PronounClass::It, PronounClass::Plural, PronounClass::Masc}) {
    if (c != *expected && has_class(output, c)) conflict = true;
  }
  j.correct = has_class(output, *expected) && !conflict;
  return j;
}

void evaluate_occurrences(std::vector<PronounOccurrence>& occurrences) {
  for (auto& occ : occurrences) {
    occ.category = categorize_pronoun(occ);
    occ.judgments.clear();
    for (const auto& sys : occ.systems) occ.judgments.push_back(judge_pronoun(occ, sys));
  }
}

std::optional<double> AccuracyCell::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

PronounTable pronoun_accuracy(const std::vector<PronounOccurrence>& occurrences, std::size_t num_systems) {
  PronounTable t;
  t.num_systems = num_systems;
  for (auto& row : t.rows) row.assign(num_systems, {});
  t.total.assign(num_systems, {});
  t.total_with_unknown.assign(num_systems, {});
  t.untranslated.assign(num_systems, 0);
  for (const auto& occ : occurrences) {
    if (occ.judgments.size() != num_systems) {
      throw InputError("pronoun_accuracy: occurrence has " + std::to_string(occ.judgments.size()) +
                       " judgments, expected " + std::to_string(num_systems));
    }
    const auto cat = static_cast<std::size_t>(occ.category);
    for (std::size_t s = 0; s < num_systems; ++s) {
      const auto& j = occ.judgments[s];
      auto bump = [&](AccuracyCell& c) {
        ++c.total;
        if (j.correct) ++c.correct;
      };
      bump(t.rows[cat][s]);
      bump(t.total_with_unknown[s]);
      if (occ.category != PronounCategory::Unknown) bump(t.total[s]);
      if (j.untranslated) ++t.untranslated[s];
    }
  }
  return t;
}

MajorityRate majority_class_rate(const std::vector<PronounOccurrence>& occurrences, bool include_unknown) {
  std::map<int, std::size_t> counts;  // -1 stands for "no pronoun expected"
  MajorityRate r;
  for (const auto& occ : occurrences) {
    if (!include_unknown && occ.category == PronounCategory::Unknown) continue;
    const auto c = expected_class(occ);
    ++counts[c ? static_cast<int>(*c) : -1];
    ++r.total;
  }
  for (const auto& [cls, n] : counts) r.majority = std::max(r.majority, n);
  return r;
}

namespace {

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string percent(const AccuracyCell& c) {
  auto a = c.accuracy();
  return a ? fixed(100.0 * *a, 1) : std::string();
}

}  // namespace

std::string format_pronoun_table(const PronounTable& table, const std::vector<std::string>& system_names) {
  if (system_names.size() != table.num_systems) throw InputError("format_pronoun_table: system name count mismatch");
  std::string out = "category\tcount";
  for (const auto& n : system_names) out += '\t' + n;
  out += '\n';
  auto row = [&](const std::string& label, const std::vector<AccuracyCell>& cells) {
    out += label + '\t' + std::to_string(cells.empty() ? 0 : cells[0].total);
    for (const auto& c : cells) out += '\t' + percent(c);
    out += '\n';
  };
  for (std::size_t c = 0; c < kNumPronounCategories; ++c) {
    if (static_cast<PronounCategory>(c) == PronounCategory::Unknown) continue;
    row(to_string(static_cast<PronounCategory>(c)), table.rows[c]);
  }
  row("total", table.total);
  row(to_string(PronounCategory::Unknown), table.rows[static_cast<std::size_t>(PronounCategory::Unknown)]);
  row("total incl. unknown", table.total_with_unknown);
  out += "untranslated\t";
  for (std::size_t s = 0; s < table.num_systems; ++s) out += '\t' + std::to_string(table.untranslated[s]);
  out += '\n';
  return out;
}

std::string adjudication_export(const std::vector<PronounOccurrence>& occurrences,
                                const std::vector<std::string>& system_names) {
  std::string out = "occurrence\tposition\tcategory\tsource\treference\tsystem\toutput\tauto_correct\tuntranslated\n";
  for (std::size_t i = 0; i < occurrences.size(); ++i) {
    const auto& occ = occurrences[i];
    for (std::size_t s = 0; s < occ.systems.size(); ++s) {
      const std::string name = s < system_names.size() ? system_names[s] : "system" + std::to_string(s);
      const bool correct = s < occ.judgments.size() && occ.judgments[s].correct;
      const bool untranslated = s < occ.judgments.size() && occ.judgments[s].untranslated;
      out += std::to_string(i) + '\t' + std::to_string(occ.position) + '\t' + to_string(occ.category) + '\t' +
             join_tokens(occ.source) + '\t' + join_tokens(occ.reference) + '\t' + name + '\t' +
             join_tokens(occ.systems[s]) + '\t' + (correct ? "1" : "0") + '\t' + (untranslated ? "1" : "0") + '\n';
    }
  }
  return out;
}

ChiSquareResult chi_square_2x2(std::size_t correct_a, std::size_t wrong_a, std::size_t correct_b,
                               std::size_t wrong_b) {
  const double a = static_cast<double>(correct_a), b = static_cast<double>(wrong_a);
  const double c = static_cast<double>(correct_b), d = static_cast<double>(wrong_b);
  const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    throw InputError("chi_square_2x2: a row or column total is zero, the test is undefined");
  }
  const double n = r1 + r2;
  const double diff = a * d - b * c;
  ChiSquareResult res;
  res.statistic = n * diff * diff / (r1 * r2 * c1 * c2);
  res.significant = res.statistic > kChiSquareCritical05;
  return res;
}

std::string format_score_table(const std::vector<SystemScores>& systems) {
  std::string out = "system\tBLEU\tchrF3\tprecision\trecall\n";
  for (const auto& s : systems) {
    out += s.name + '\t' + fixed(100.0 * s.bleu.score, 2) + '\t' + fixed(100.0 * s.chrf.score, 2) + '\t' +
           fixed(100.0 * s.chrf.precision, 2) + '\t' + fixed(100.0 * s.chrf.recall, 2) + '\n';
  }
  return out;
}

}  // namespace ctxnmt
