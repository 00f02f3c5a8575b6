#include <doctest.h>

#include <cmath>

#include "ctxnmt/decode.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/train.hpp"

using namespace ctxnmt;

namespace {

ModelParams<float> random_model(std::uint64_t seed) {
  auto rng = Rng::stream(seed, "init");
  return ModelParams<float>::initialized({12, 10, 6, 8, 6}, rng);
}

std::vector<TokenId> random_source(Rng& rng) {
  std::vector<TokenId> s;
  for (std::size_t k = 0, n = 1 + rng.below(7); k < n; ++k) s.push_back(static_cast<TokenId>(4 + rng.below(8)));
  return s;
}

void check_rows(const Eigen::MatrixXd& a) {
  for (Index t = 0; t < a.rows(); ++t) {
    CHECK(std::abs(a.row(t).sum() - 1.0) < 1e-6);
    CHECK(a.row(t).minCoeff() >= 0.0);
    CHECK(a.row(t).maxCoeff() <= 1.0);
  }
}

}  // namespace

TEST_CASE("greedy decoding basics") {
  const auto p = random_model(1);
  const std::vector<TokenId> src{4, 5, 6};
  const auto empty = greedy_decode(p, src, 0);
  CHECK(empty.tokens.empty());
  const auto h = greedy_decode(p, src, 12);
  CHECK(h.attention.rows() == static_cast<Index>(h.tokens.size()));
  CHECK(h.attention.cols() == 3);
  check_rows(h.attention);
  if (!h.finished) CHECK(h.tokens.size() == 12);
}

TEST_CASE("beam 1 without penalties equals greedy") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto p = random_model(seed);
    auto rng = Rng::stream(seed, "inputs");
    BeamConfig cfg;
    cfg.beam_size = 1;
    cfg.length_alpha = 0.0;
    cfg.coverage_beta = 0.0;
    for (int i = 0; i < 25; ++i) {
      const auto src = random_source(rng);
      const auto g = greedy_decode(p, src, cfg.max_length(src.size()));
      const auto b = beam_search({&p}, src, cfg);
      CHECK(g.tokens == b.tokens);
      CHECK(g.finished == b.finished);
      CHECK(std::abs(g.log_prob - b.log_prob) < 1e-9);
    }
  }
}

TEST_CASE("ensembles") {
  const auto p = random_model(7);
  const auto q = random_model(8);
  auto rng = Rng::stream(7, "inputs");
  BeamConfig cfg;
  cfg.beam_size = 4;
  for (int i = 0; i < 20; ++i) {
    const auto src = random_source(rng);
    const auto single = beam_search({&p}, src, cfg);
    const auto twice = beam_search({&p, &p}, src, cfg);
    CHECK(single.tokens == twice.tokens);
    CHECK(single.log_prob == twice.log_prob);
    CHECK(single.attention == twice.attention);
    const auto mixed = beam_search({&p, &q}, src, cfg);
    check_rows(mixed.attention);
  }
  CHECK_THROWS_AS(beam_search({}, {4}, cfg), ConfigError);
}

TEST_CASE("beam configuration") {
  BeamConfig cfg;
  CHECK(cfg.beam_size == 8);
  CHECK(cfg.length_alpha == 0.6);
  CHECK(cfg.coverage_beta == 0.0);
  CHECK(cfg.max_length(4) == 17);
  cfg.beam_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("coverage term") {
  Eigen::MatrixXd a(2, 3);
  a << 0.5, 0.5, 0.0, 0.9, 0.05, 0.05;
  // Totals received: 1.4 (clipped to 1), 0.55, 0.05.
  CHECK(coverage_term(a) == doctest::Approx(std::log(0.55) + std::log(0.05)));
  Eigen::MatrixXd full(1, 1);
  full << 1.0;
  CHECK(coverage_term(full) == 0.0);
  const auto p = random_model(3);
  BeamConfig covered;
  covered.coverage_beta = 0.5;
  const auto c = beam_search({&p}, {4, 5, 6, 7}, covered);
  check_rows(c.attention);
  CHECK(coverage_term(c.attention) <= 0.0);
}

TEST_CASE("extract_scored_segment") {
  const Tokens out{"look", ",", "Bob", "!", "_BREAK_", "-", "Where", "are", "they", "?"};
  CHECK(extract_scored_segment(out, SegmentMode::Last) == Tokens{"-", "Where", "are", "they", "?"});
  CHECK(extract_scored_segment(out, SegmentMode::All) ==
        Tokens{"look", ",", "Bob", "!", "-", "Where", "are", "they", "?"});
  const Tokens plain{"a", "b"};
  CHECK(extract_scored_segment(plain, SegmentMode::Last) == plain);
}

TEST_CASE("wider beams find more probable outputs on a trained model") {
  HyperParams hp;
  hp.embed_dim = 12;
  hp.hidden_dim = 16;
  hp.attention_dim = 12;
  hp.epochs = 3;
  hp.batch_size = 8;
  hp.learning_rate = 0.02;
  std::vector<ExtendedExample> ex;
  auto rng = Rng::stream(5, "copy");
  for (int i = 0; i < 60; ++i) {
    ExtendedExample e;
    for (std::size_t k = 0, n = 2 + rng.below(4); k < n; ++k) e.source.push_back(std::string(1, 'a' + rng.below(8)));
    e.target = e.source;
    ex.push_back(e);
  }
  const auto data = make_training_set(ex, hp);
  const auto model = train(data, hp, {}).checkpoints.back();
  BeamConfig narrow, wide;
  narrow.beam_size = 1;
  narrow.length_alpha = wide.length_alpha = 0.0;
  wide.beam_size = 8;
  double lp1 = 0, lp8 = 0;
  for (const auto& pair : data.pairs) {
    lp1 += beam_search({&model.params}, pair.source, narrow).log_prob;
    lp8 += beam_search({&model.params}, pair.source, wide).log_prob;
  }
  CHECK(lp8 >= lp1);
}
