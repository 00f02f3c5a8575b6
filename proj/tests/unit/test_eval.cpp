#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "ctxnmt/config.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/eval.hpp"
#include "ctxnmt/rng.hpp"
#include "unit/helpers.hpp"

using namespace ctxnmt;

namespace {

std::vector<Tokens> read_tokens(const std::string& name) {
  std::vector<Tokens> out;
  for (const auto& line : read_lines(testing::data_path(name))) out.push_back(split_tokens(line));
  return out;
}

std::map<std::string, double> oracle_values() {
  std::map<std::string, double> out;
  std::ifstream in(testing::data_path("metric_values.tsv"));
  std::string key;
  double value;
  while (in >> key >> value) out[key] = value;
  return out;
}

PronounOccurrence occ(const std::string& src, const std::string& ref, std::size_t position) {
  PronounOccurrence o;
  o.source = split_tokens(src);
  o.reference = split_tokens(ref);
  o.position = position;
  o.category = categorize_pronoun(o);
  return o;
}

}  // namespace

TEST_CASE("metrics match the brute-force oracle") {
  const auto hyp = read_tokens("metric_pairs.hyp");
  const auto ref = read_tokens("metric_pairs.ref");
  const auto docs = read_lines(testing::data_path("metric_pairs.docs"));
  const auto v = oracle_values();
  REQUIRE(v.size() == 18);
  REQUIRE(hyp.size() == 20);

  const auto b = bleu(hyp, ref);
  CHECK(std::abs(b.score - v.at("bleu")) < 1e-9);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(b.precisions[n] - v.at("bleu_p" + std::to_string(n + 1))) < 1e-9);
  CHECK(std::abs(b.brevity_penalty - v.at("bleu_bp")) < 1e-9);
  const auto c = chrf(hyp, ref);
  CHECK(std::abs(c.score - v.at("chrf")) < 1e-9);
  CHECK(std::abs(c.precision - v.at("chrf_precision")) < 1e-9);
  CHECK(std::abs(c.recall - v.at("chrf_recall")) < 1e-9);

  const auto e = score_extended(hyp, ref, docs);
  CHECK(std::abs(e.bleu.score - v.at("extended_bleu")) < 1e-9);
  CHECK(std::abs(e.chrf.score - v.at("extended_chrf")) < 1e-9);
  CHECK(std::abs(e.chrf.precision - v.at("extended_chrf_precision")) < 1e-9);
  CHECK(std::abs(e.chrf.recall - v.at("extended_chrf_recall")) < 1e-9);
}

TEST_CASE("bleu edge cases") {
  const std::vector<Tokens> ref{{"the", "cat", "sat", "on", "the", "mat"}, {"a", "dog", "ran", "off", "today"}};
  const auto same = bleu(ref, ref);
  CHECK(same.score == doctest::Approx(1.0));
  CHECK(same.brevity_penalty == doctest::Approx(1.0));
  CHECK(bleu({{}, {}}, ref).score == 0.0);
  const auto clipped = bleu({{"the", "the", "the"}}, {{"the", "cat"}});
  CHECK(clipped.matches[0] == 1);
  CHECK(clipped.totals[0] == 3);
  CHECK(clipped.precisions[0] == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(bleu({{"a"}}, ref), InputError);
  CHECK_THROWS_AS(chrf({{"a"}}, ref), InputError);
}

TEST_CASE("chrf edge cases") {
  const std::vector<Tokens> ref{{"hello", "world"}, {"zürich", "ist", "schön"}};
  const auto same = chrf(ref, ref);
  CHECK(same.score == doctest::Approx(1.0));
  CHECK(same.precision == doctest::Approx(1.0));
  CHECK(same.recall == doctest::Approx(1.0));
  CHECK(chrf({{"abc"}}, {{"xyz"}}).score == 0.0);

  auto rng = Rng::stream(11, "swap");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tokens> a, b;
    for (int i = 0; i < 5; ++i) {
      Tokens x, y;
      for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) x.push_back(std::string(1 + rng.below(3), 'a' + rng.below(5)));
      for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) y.push_back(std::string(1 + rng.below(3), 'a' + rng.below(5)));
      a.push_back(x);
      b.push_back(y);
    }
    const auto ab = chrf(a, b), ba = chrf(b, a);
    CHECK(std::abs(ab.precision - ba.recall) < 1e-12);
    CHECK(std::abs(ab.recall - ba.precision) < 1e-12);
  }
}

TEST_CASE("sliding concatenation") {
  const std::vector<Tokens> units{{"A"}, {"B", "_BREAK_"}, {"C"}, {"D"}};
  const std::vector<Tokens> sentences{{"a", "b", "c", "d"}, {"e", "f", "g", "h"}, {"i", "j", "k", "l"}, {"m", "n", "o", "p"}};
  const std::vector<std::string> docs{"d1", "d1", "d1", "d2"};
  const auto cat = sliding_concatenation(units, docs, 2, "_BREAK_");
  CHECK(cat == std::vector<Tokens>{{"A"}, {"A", "B"}, {"B", "C"}, {"D"}});
  CHECK_THROWS_AS(sliding_concatenation(units, {"d1"}, 2, "_BREAK_"), InputError);
  CHECK_THROWS_AS(sliding_concatenation(units, docs, 0, "_BREAK_"), InputError);
  const auto e = score_extended(sentences, sentences, docs);
  CHECK(e.bleu.score == doctest::Approx(1.0));
  CHECK(e.chrf.score == doctest::Approx(1.0));
}

TEST_CASE("pronoun categories") {
  CHECK(occ("Kommen Sie !", "Come !", 1).category == PronounCategory::PoliteImperative);
  CHECK(occ("Haben Sie Zeit ?", "Do you have time ?", 1).category == PronounCategory::PoliteOther);
  CHECK(occ("Ich sehe sie .", "I see them .", 2).category == PronounCategory::Plural);
  CHECK(occ("Ich sehe sie .", "I see they .", 2).category == PronounCategory::Plural);
  CHECK(occ("Ich sehe sie .", "I see her .", 2).category == PronounCategory::FemSingular);
  CHECK(occ("Ich sehe sie .", "I see you .", 2).category == PronounCategory::Unknown);
  CHECK(occ("Ich sehe sie .", "I see him .", 2).category == PronounCategory::Unknown);
  CHECK(to_string(PronounCategory::Plural) == "plural");

  const auto found = find_occurrences(split_tokens("Sie sagt , sie kommt"), split_tokens("she says she comes"),
                                      {split_tokens("she says she comes")});
  CHECK(found.size() == 2);
  CHECK(pronoun_class("Them") == PronounClass::Plural);
  CHECK(!pronoun_class("table").has_value());
}

TEST_CASE("pronoun judgments") {
  const auto plural = occ("Ich sehe sie .", "I see them .", 2);
  CHECK(judge_pronoun(plural, split_tokens("I see them .")).correct);
  CHECK(judge_pronoun(plural, split_tokens("I see they .")).correct);
  CHECK(!judge_pronoun(plural, split_tokens("I see her .")).correct);
  CHECK(!judge_pronoun(plural, split_tokens("I see her and them .")).correct);
  const auto empty = judge_pronoun(plural, {});
  CHECK(!empty.correct);
  CHECK(empty.untranslated);
  const auto copied = judge_pronoun(plural, split_tokens("ich sehe sie ."));
  CHECK(!copied.correct);
  CHECK(copied.untranslated);

  const auto imperative = occ("Kommen Sie !", "Come !", 1);
  CHECK(judge_pronoun(imperative, split_tokens("Come !")).correct);
  CHECK(judge_pronoun(imperative, split_tokens("Come you !")).correct);
  CHECK(!judge_pronoun(imperative, split_tokens("Come they !")).correct);
}

TEST_CASE("accuracy table") {
  std::vector<PronounOccurrence> all;
  for (int i = 0; i < 86; ++i) {
    auto o = occ("Ich sehe sie .", "I see them .", 2);
    o.systems = {split_tokens(i < 60 ? "I see them ." : "I see her ."), split_tokens("I see them .")};
    all.push_back(o);
  }
  auto unknown = occ("Ich sehe sie .", "I see him .", 2);
  unknown.systems = {split_tokens("I see him ."), split_tokens("I see it .")};
  all.push_back(unknown);
  evaluate_occurrences(all);
  const auto t = pronoun_accuracy(all, 2);
  const auto& row = t.rows[static_cast<std::size_t>(PronounCategory::Plural)];
  CHECK(row[0].correct == 60);
  CHECK(row[0].total == 86);
  CHECK(*row[0].accuracy() * 100 == doctest::Approx(69.77).epsilon(1e-3));
  CHECK(t.total[0].total == 86);
  CHECK(t.total_with_unknown[0].total == 87);
  CHECK(t.total_with_unknown[0].correct == 61);
  CHECK(!t.rows[static_cast<std::size_t>(PronounCategory::PoliteOther)][0].accuracy().has_value());
  const auto text = format_pronoun_table(t, {"base", "ctx"});
  CHECK(text.find("plural\t86\t69.8\t100.0\n") != std::string::npos);
  CHECK(text.find("polite other\t0\t\t\n") != std::string::npos);
  const auto m = majority_class_rate(all);
  CHECK(m.majority == 86);
  CHECK(m.total == 87);
  CHECK(!adjudication_export(all, {"base", "ctx"}).empty());
}

TEST_CASE("chi-square") {
  CHECK(chi_square_2x2(10, 10, 10, 10).statistic == doctest::Approx(0.0));
  CHECK(chi_square_2x2(20, 10, 40, 20).statistic == doctest::Approx(0.0));
  const auto t7 = chi_square_2x2(60, 26, 68, 18);
  // Expected cells 64 and 22: 2 * (16/64 + 16/22).
  CHECK(t7.statistic == doctest::Approx(2.0 * (16.0 / 64.0 + 16.0 / 22.0)));
  CHECK(!t7.significant);
  const auto strong = chi_square_2x2(50, 0, 0, 50);
  CHECK(strong.statistic == doctest::Approx(100.0));
  CHECK(strong.significant);
  CHECK_THROWS_AS(chi_square_2x2(0, 0, 5, 5), InputError);
  CHECK_THROWS_AS(chi_square_2x2(5, 0, 5, 0), InputError);
  auto rng = Rng::stream(2, "chi");
  for (int i = 0; i < 50; ++i) {
    const std::size_t a = 1 + rng.below(50), b = 1 + rng.below(50), c = 1 + rng.below(50), d = 1 + rng.below(50);
    const double s = chi_square_2x2(a, b, c, d).statistic;
    CHECK(chi_square_2x2(c, d, a, b).statistic == doctest::Approx(s));
    CHECK(chi_square_2x2(b, a, d, c).statistic == doctest::Approx(s));
  }
}

TEST_CASE("score table") {
  SystemScores s;
  s.name = "base";
  s.bleu.score = 0.271;
  s.chrf.score = 0.5;
  s.chrf.precision = 0.25;
  s.chrf.recall = 0.125;
  CHECK(format_score_table({s}) == "system\tBLEU\tchrF3\tprecision\trecall\nbase\t27.10\t50.00\t25.00\t12.50\n");
}

TEST_CASE("configuration round trip and errors") {
  RunConfig c;
  c.hyper.learning_rate = 0.0123;
  c.beam.beam_size = 3;
  c.systems = {"baseline", "2+2"};
  c.analysis.majority_basis = MajorityBasis::Mass;
  c.apply_seed(42);
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.hyper.rng_seed == 42);
  CHECK(back.systems == c.systems);
  CHECK_THROWS_AS(parse_config("[model]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nepochs = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[decode]\nbeam_size = 0\n"), ConfigError);
}
