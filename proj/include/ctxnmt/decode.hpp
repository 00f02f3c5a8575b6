#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctxnmt/model.hpp"

namespace ctxnmt {

struct BeamConfig {
  std::size_t beam_size = 8;
  double max_len_factor = 3.0;
  std::size_t max_len_constant = 5;
  /// Length normalization exponent: score = logP / len^alpha.
  double length_alpha = 0.6;
  /// Coverage penalty weight; 0 disables it.
  double coverage_beta = 0.0;

  void validate() const;
  std::size_t max_length(std::size_t source_length) const;
  bool operator==(const BeamConfig&) const = default;
};

struct Hypothesis {
  std::vector<TokenId> tokens;   // without the final EOS
  double log_prob = 0.0;         // includes the EOS step when finished
  double score = 0.0;            // normalized, coverage-adjusted
  Eigen::MatrixXd attention;     // one row per entry of `tokens`
  bool finished = false;
};

using Ensemble = std::vector<const ModelParams<float>*>;

/// Argmax decoding until EOS or `max_len` tokens. Ties go to the lower id.
/// `finished` is false when the output was truncated at `max_len`.
Hypothesis greedy_decode(const ModelParams<float>& params, const std::vector<TokenId>& source,
                         std::size_t max_len);

/// Length-normalized beam search. Ensemble members are averaged in
/// probability space at every step; their attention is averaged as well.
/// Coverage term: sum over source positions of log(min(1, attention
/// received)), added with weight beta so that uncovered input lowers the
/// score. Throws ConfigError on an empty ensemble.
Hypothesis beam_search(const Ensemble& ensemble, const std::vector<TokenId>& source,
                       const BeamConfig& config);

/// Coverage term of an attention matrix (rows = output steps).
double coverage_term(const Eigen::MatrixXd& attention);

enum class SegmentMode { Last, All };

/// LAST: tokens after the final break token (everything when there is
/// none). ALL: every token except break tokens.
Tokens extract_scored_segment(const Tokens& output, SegmentMode mode,
                              const std::string& break_token = "_BREAK_");

}  // namespace ctxnmt
