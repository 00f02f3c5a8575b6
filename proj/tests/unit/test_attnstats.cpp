#include <doctest.h>

#include <cmath>

#include "ctxnmt/attnstats.hpp"
#include "ctxnmt/error.hpp"
#include "unit/attn_oracle.hpp"

using namespace ctxnmt;

namespace {

AttentionRecord record(Tokens src, Tokens trg, std::vector<std::vector<double>> rows) {
  AttentionRecord r;
  r.source_tokens = std::move(src);
  r.target_tokens = std::move(trg);
  r.weights.resize(static_cast<Index>(rows.size()), static_cast<Index>(r.source_tokens.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t s = 0; s < rows[t].size(); ++s) r.weights(static_cast<Index>(t), static_cast<Index>(s)) = rows[t][s];
  }
  return r;
}

PartitionedAttention occurrence(const std::string& word, std::vector<double> ext, std::vector<double> in,
                                std::size_t position = 1) {
  PartitionedAttention p;
  p.word = word;
  p.position = position;
  for (double w : ext) {
    p.external.push_back(p.weights.size());
    p.weights.push_back(w);
  }
  for (double w : in) {
    p.internal.push_back(p.weights.size());
    p.weights.push_back(w);
  }
  return p;
}

}  // namespace

TEST_CASE("2+1 partition") {
  const auto r = record({"ctx", "focus"}, {"Word"}, {{0.7, 0.3}});
  const auto parts = partition(r, {1, {}, "_BREAK_"}, ModelKind::TwoPlusOne);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].word == "word");
  CHECK(parts[0].external_mass() == doctest::Approx(0.7));
  CHECK(parts[0].internal_mass() == doctest::Approx(0.3));
  CHECK(corpus_external_proportion(parts) == doctest::Approx(0.7));

  const auto none = partition(record({"a", "b"}, {"x", "y"}, {{0.5, 0.5}, {0.1, 0.9}}), {0, {}, "_BREAK_"},
                              ModelKind::TwoPlusOne);
  for (const auto& p : none) CHECK(p.external_mass() == 0.0);
  CHECK(corpus_external_proportion(none) == 0.0);
  CHECK(majority_peak_stats(none, 1).empty());
}

TEST_CASE("2+2 partition excludes breaks and follows generated segments") {
  // Source: a _BREAK_ b ; target: x _BREAK_ y
  const auto r = record({"a", "_BREAK_", "b"}, {"x", "_BREAK_", "y"},
                        {{0.6, 0.1, 0.3}, {0.2, 0.6, 0.2}, {0.5, 0.2, 0.3}});
  const auto parts = partition(r, {0, {1}, "_BREAK_"}, ModelKind::TwoPlusTwo);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].word == "x");
  CHECK(parts[0].internal_mass() == doctest::Approx(0.6));
  CHECK(parts[0].external_mass() == doctest::Approx(0.3));
  CHECK(parts[1].word == "y");
  CHECK(parts[1].position == 1);
  CHECK(parts[1].break_mass() == doctest::Approx(0.2));
  CHECK(parts[1].external_mass() == doctest::Approx(0.5));
  CHECK(parts[1].internal_mass() == doctest::Approx(0.3));
  for (const auto& p : parts) {
    CHECK(p.external_mass() + p.internal_mass() + p.break_mass() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("malformed geometry") {
  const auto r = record({"a", "b"}, {"x"}, {{0.5, 0.5}});
  CHECK_THROWS_AS(partition(r, {3, {}, "_BREAK_"}, ModelKind::TwoPlusOne), MalformedDataError);
  CHECK_THROWS_AS(partition(r, {0, {2}, "_BREAK_"}, ModelKind::TwoPlusTwo), MalformedDataError);
  auto bad = r;
  bad.target_tokens.push_back("y");
  CHECK_THROWS_AS(partition(bad, {0, {}, "_BREAK_"}, ModelKind::TwoPlusOne), MalformedDataError);
  CHECK_THROWS_AS(parse_model_kind("3+1"), ConfigError);
  CHECK(parse_model_kind("2+2") == ModelKind::TwoPlusTwo);
}

TEST_CASE("mass statistics") {
  std::vector<PartitionedAttention> parts{occurrence("w", {0.2}, {0.8}, 1), occurrence("w", {0.4}, {0.6}, 2)};
  const auto t = word_mass_stats(parts, 1);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].external == doctest::Approx(0.3));
  CHECK(t.rows[0].internal == doctest::Approx(0.7));
  CHECK(t.rows[0].proportion == doctest::Approx(30.0));
  CHECK(t.rows[0].mean_position == doctest::Approx(1.5));
  // Default filter needs five occurrences.
  std::vector<PartitionedAttention> four(4, occurrence("rare", {0.5}, {0.5}));
  CHECK(word_mass_stats(four).rows.empty());
  four.push_back(occurrence("rare", {0.5}, {0.5}));
  CHECK(word_mass_stats(four).rows.size() == 1);

  const std::vector<PartitionedAttention> two{occurrence("a", {0.7}, {0.3}), occurrence("b", {0.1}, {0.9})};
  CHECK(corpus_external_proportion(two) == doctest::Approx(0.4));
}

TEST_CASE("peak statistics") {
  const std::vector<PartitionedAttention> parts{occurrence("w", {0.05, 0.10}, {0.3, 0.2})};
  const auto t = word_peak_stats(parts, 1);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].external == doctest::Approx(0.10));
  CHECK(t.rows[0].internal == doctest::Approx(0.3));
  CHECK(t.rows[0].proportion == doctest::Approx(25.0));
  const auto single = occurrence("s", {0.4}, {0.6});
  CHECK(single.external_peak() == single.external_mass());
  const auto empty = occurrence("e", {}, {1.0});
  CHECK(empty.external_peak() == 0.0);
}

TEST_CASE("majority statistics") {
  std::vector<PartitionedAttention> parts;
  for (int i = 0; i < 91; ++i) parts.push_back(i < 7 ? occurrence("yeah", {0.6}, {0.4}) : occurrence("yeah", {0.1}, {0.9}));
  for (int i = 0; i < 10; ++i) parts.push_back(i < 4 ? occurrence("oh", {0.9}, {0.1}) : occurrence("oh", {0.0}, {1.0}));
  const auto rows = majority_peak_stats(parts);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].word == "yeah");
  CHECK(rows[0].count == 7);
  CHECK(rows[0].freq == 91);
  CHECK(rows[0].proportion == doctest::Approx(0.077).epsilon(0.005));
  CHECK(format_majority_stats(rows) == "word\tproportion\tfreq_ext_peak\tfreq\nyeah\t0.077\t7\t91\n");
  // Mass basis: with a single position per side it agrees with peaks.
  CHECK(majority_peak_stats(parts, 5, MajorityBasis::Mass).size() == 1);
}

TEST_CASE("stats agree with the brute-force oracle") {
  for (auto kind : {ModelKind::TwoPlusOne, ModelKind::TwoPlusTwo}) {
    const auto parts = partition_all(testing::random_records(200, 3, kind), kind);
    CHECK(testing::compare_stats(parts, 5, 5) == "");
    CHECK(testing::compare_stats(parts, 1, 1) == "");
    for (const auto& p : parts) {
      CHECK(p.external_mass() + p.internal_mass() + p.break_mass() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(p.external_peak() <= p.external_mass() + 1e-15);
      CHECK(p.internal_peak() <= p.internal_mass() + 1e-15);
    }
  }
}

TEST_CASE("table formatting") {
  std::vector<PartitionedAttention> parts(5, occurrence("w", {0.25}, {0.75}, 2));
  const auto text = format_word_stats(word_mass_stats(parts));
  CHECK(text ==
        "word\tfreq\texternal\tinternal\tprop.%\tavg.pos\n"
        "w\t5\t0.250\t0.750\t25.0\t2.00\n"
        "average\t---\t0.250\t0.750\t25.0\t---\n");
}

TEST_CASE("heatmaps") {
  ExportedAttention e;
  e.record = record({"a", "_BREAK_"}, {"x", "_BREAK_"}, {{1.0, 0.0}, {0.25, 0.75}});
  e.source_breaks = {1};
  const auto tsv = heatmap_tsv(e);
  CHECK(tsv == "\ta\t||\nx\t1.0000\t0.0000\n||\t0.2500\t0.7500\n");
  std::size_t lines = 0;
  for (char c : tsv) lines += c == '\n';
  CHECK(lines == 3);
  const auto pgm = heatmap_pgm(e.record);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(pgm.size() == header.size() + 4);
  CHECK(pgm.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(pgm[header.size()]) == 0);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 1]) == 255);
}
