#include <doctest.h>

#include <algorithm>

#include "ctxnmt/corpus.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/rng.hpp"
#include "unit/helpers.hpp"

using namespace ctxnmt;

namespace {

std::vector<TranslationUnit> mini_corpus() {
  return read_corpus(testing::data_path("mini.src"), testing::data_path("mini.trg"), testing::data_path("mini.docs"));
}

std::vector<TranslationUnit> random_corpus(Rng& rng) {
  std::vector<TranslationUnit> units;
  const std::size_t docs = 1 + rng.below(5);
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      TranslationUnit u;
      u.doc_id = "d" + std::to_string(d);
      u.index_in_doc = i;
      const std::size_t ls = rng.below(5), lt = rng.below(5);
      for (std::size_t k = 0; k < ls; ++k) u.source.push_back("s" + std::to_string(rng.below(9)));
      for (std::size_t k = 0; k < lt; ++k) u.target.push_back("t" + std::to_string(rng.below(9)));
      units.push_back(u);
    }
  }
  return units;
}

}  // namespace

TEST_CASE("mark_context") {
  CHECK(mark_context({"siehst", "du", "sie", "?"}, Marking::Prefix, "cc_") ==
        Tokens{"cc_siehst", "cc_du", "cc_sie", "cc_?"});
  CHECK(mark_context({}, Marking::Prefix, "cc_").empty());
  CHECK(mark_context({"ja", "."}, Marking::Break, "cc_") == Tokens{"ja", "."});
}

TEST_CASE("extend_corpus reproduces the two context layouts") {
  const auto units = mini_corpus();
  REQUIRE(units.size() == 4);

  const auto prefix = extend_corpus(units, ContextConfig::two_plus_one_prefix());
  CHECK(join_tokens(prefix[1].source) == "cc_sieh cc_, cc_Bob cc_! -Wo sind sie ?");
  CHECK(join_tokens(prefix[1].target) == "- Where are they ?");
  CHECK(prefix[1].source_focus_start == 4);

  const auto both = extend_corpus(units, ContextConfig::two_plus_two());
  CHECK(join_tokens(both[1].source) == "sieh , Bob ! _BREAK_ -Wo sind sie ?");
  CHECK(join_tokens(both[1].target) == "look , Bob ! _BREAK_ - Where are they ?");
  CHECK(both[1].source_breaks == std::vector<std::size_t>{4});
  CHECK(both[1].target_breaks == std::vector<std::size_t>{4});

  for (const auto& cfg : {ContextConfig::baseline(), ContextConfig::two_plus_one_prefix(),
                          ContextConfig::two_plus_one_break(), ContextConfig::two_plus_two()}) {
    const auto ex = extend_corpus(units, cfg);
    CHECK(ex[0].source == units[0].source);
    CHECK(ex[0].target == units[0].target);
    CHECK(ex[0].source_focus_start == 0);
  }
}

TEST_CASE("extract_focus") {
  const auto units = mini_corpus();
  const auto prefix = extend_corpus(units, ContextConfig::two_plus_one_prefix());
  CHECK(extract_focus(prefix[2], Side::Source) == Tokens{"siehst", "du", "sie", "?"});
  const auto both = extend_corpus(units, ContextConfig::two_plus_two());
  CHECK(extract_focus(both[1], Side::Target) == Tokens{"-", "Where", "are", "they", "?"});
  CHECK(extract_focus(both[0], Side::Source) == units[0].source);
}

TEST_CASE("extension properties on random corpora") {
  auto rng = Rng::stream(11, "test");
  for (int trial = 0; trial < 200; ++trial) {
    const auto units = random_corpus(rng);
    ContextConfig cfg;
    switch (trial % 4) {
      case 0: cfg = ContextConfig::two_plus_one_prefix(); break;
      case 1: cfg = ContextConfig::two_plus_one_break(); break;
      case 2: cfg = ContextConfig::two_plus_two(); break;
      default:
        cfg = ContextConfig::two_plus_two();
        cfg.source_window = 2;
        cfg.target_window = 2;
    }
    const auto ex = extend_corpus(units, cfg);
    REQUIRE(ex.size() == units.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
      CHECK(extract_focus(ex[i], Side::Source) == units[i].source);
      CHECK(extract_focus(ex[i], Side::Target) == units[i].target);
      const auto& idx = units[i].index_in_doc;
      if (cfg.marking == Marking::Break) {
        const auto breaks = std::count(ex[i].source.begin(), ex[i].source.end(), cfg.break_token);
        CHECK(static_cast<std::size_t>(breaks) == std::min(cfg.source_window, idx));
        for (std::size_t k = ex[i].source_focus_start; k < ex[i].source.size(); ++k) {
          CHECK(ex[i].source[k] != cfg.break_token);
        }
      }
      if (idx == 0) {
        CHECK(ex[i].source == units[i].source);
        CHECK(ex[i].target == units[i].target);
      }
      CHECK(ex[i].origin.doc_id == units[i].doc_id);
    }
  }
}

TEST_CASE("context concatenated oldest first with window 2") {
  std::vector<TranslationUnit> units{{{"a"}, {"A"}, "d", 0}, {{"b"}, {"B"}, "d", 1}, {{"c"}, {"C"}, "d", 2}};
  auto cfg = ContextConfig::two_plus_two();
  cfg.source_window = cfg.target_window = 2;
  const auto ex = extend_corpus(units, cfg);
  CHECK(join_tokens(ex[2].source) == "a _BREAK_ b _BREAK_ c");
  CHECK(join_tokens(ex[2].target) == "A _BREAK_ B _BREAK_ C");
}

TEST_CASE("malformed corpora are rejected") {
  std::vector<TranslationUnit> gap{{{"a"}, {"A"}, "d", 0}, {{"b"}, {"B"}, "d", 2}};
  CHECK_THROWS_AS(extend_corpus(gap, ContextConfig::two_plus_two()), MalformedDataError);
  std::vector<TranslationUnit> interleaved{
      {{"a"}, {"A"}, "d", 0}, {{"b"}, {"B"}, "e", 0}, {{"c"}, {"C"}, "d", 1}};
  CHECK_THROWS_AS(validate_corpus(interleaved), MalformedDataError);
}

TEST_CASE("context configuration invariants") {
  ContextConfig bad;
  bad.marking = Marking::Prefix;
  bad.source_window = 1;
  bad.target_window = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ContextConfig::from_mode("3+3"), ConfigError);
  CHECK(ContextConfig::from_mode("2+1") == ContextConfig::two_plus_one_prefix());
}

TEST_CASE("extended corpus files round trip") {
  const auto dir = testing::scratch_dir("corpus-io");
  const auto ex = extend_corpus(mini_corpus(), ContextConfig::two_plus_two());
  write_extended(dir / "x", ex);
  CHECK(read_extended(dir / "x") == ex);
}

TEST_CASE("read_corpus names file and line of a bad token") {
  const auto dir = testing::scratch_dir("corpus-bad");
  write_file_atomic(dir / "a.src", "ok line\nbad  line\n");
  write_file_atomic(dir / "a.trg", "fine\nfine\n");
  write_file_atomic(dir / "a.docs", "d\nd\n");
  try {
    read_corpus(dir / "a.src", dir / "a.trg", dir / "a.docs");
    FAIL("expected MalformedDataError");
  } catch (const MalformedDataError& e) {
    CHECK(e.line() == 2);
    CHECK(e.file() == (dir / "a.src").string());
  }
}

TEST_CASE("synthetic corpus") {
  SUBCASE("matches the committed golden output") {
    const auto units = generate_synthetic_corpus(SynthSpec::standard(6, 10, 7));
    const auto golden = read_corpus(testing::data_path("synth_golden.src"), testing::data_path("synth_golden.trg"),
                                    testing::data_path("synth_golden.docs"));
    CHECK(units == golden);
  }
  SUBCASE("empty and deterministic") {
    CHECK(generate_synthetic_corpus(SynthSpec::standard(0, 10, 7)).empty());
    CHECK(generate_synthetic_corpus(SynthSpec::standard(30, 10, 3)) ==
          generate_synthetic_corpus(SynthSpec::standard(30, 10, 3)));
    CHECK(generate_synthetic_corpus(SynthSpec::standard(30, 10, 3)) !=
          generate_synthetic_corpus(SynthSpec::standard(30, 10, 4)));
  }
  SUBCASE("pronoun follows the antecedent class, classes roughly uniform") {
    const auto spec = SynthSpec::standard(400, 10, 5);
    const auto units = generate_synthetic_corpus(spec);
    std::array<std::size_t, kNumNounClasses> counts{};
    for (std::size_t i = 1; i < units.size(); i += 2) {
      const auto& ante = units[i - 1];
      REQUIRE(ante.doc_id == units[i].doc_id);
      CHECK(std::find(units[i].source.begin(), units[i].source.end(), spec.source_pronoun) != units[i].source.end());
      const auto noun = std::find_if(spec.lexicon.begin(), spec.lexicon.end(), [&](const LexiconEntry& e) {
        return std::find(ante.target.begin(), ante.target.end(), e.target_noun) != ante.target.end();
      });
      REQUIRE(noun != spec.lexicon.end());
      const auto& pron = spec.pronoun_for_class[static_cast<std::size_t>(noun->noun_class)];
      CHECK(std::find(units[i].target.begin(), units[i].target.end(), pron) != units[i].target.end());
      ++counts[static_cast<std::size_t>(noun->noun_class)];
    }
    for (auto c : counts) {
      CHECK(c > 400 * 5 / 4 * 8 / 10);
      CHECK(c < 400 * 5 / 4 * 12 / 10);
    }
  }
}
