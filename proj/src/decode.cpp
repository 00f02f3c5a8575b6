#include "ctxnmt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ctxnmt/error.hpp"

namespace ctxnmt {

void BeamConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (length_alpha < 0.0 || length_alpha > 1.0) throw ConfigError("length_alpha must be in [0, 1]");
  if (coverage_beta < 0.0) throw ConfigError("coverage_beta must be >= 0");
  if (max_len_factor < 0.0) throw ConfigError("max_len_factor must be >= 0");
}

std::size_t BeamConfig::max_length(std::size_t source_length) const {
  return static_cast<std::size_t>(max_len_factor * static_cast<double>(source_length)) + max_len_constant;
}

namespace {

TokenId argmax(const Eigen::VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<TokenId>(best);
}

void append_row(Eigen::MatrixXd& m, const Eigen::VectorXd& row) {
  m.conservativeResize(m.rows() + 1, row.size());
  m.row(m.rows() - 1) = row.transpose();
}

}  // namespace

Hypothesis greedy_decode(const ModelParams<float>& params, const std::vector<TokenId>& source,
                         std::size_t max_len) {
  Hypothesis hyp;
  hyp.attention.resize(0, static_cast<Index>(source.size()));
  if (max_len == 0 || source.empty()) return hyp;
  const DecoderSession<float> session(params, source);
  auto state = session.start();
  TokenId previous = Vocabulary::kBos;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto out = session.step(state, previous);
    const TokenId next = argmax(out.log_probs);
    hyp.log_prob += out.log_probs(next);
    if (next == Vocabulary::kEos) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(next);
    append_row(hyp.attention, out.attention);
    state = std::move(out.next);
    previous = next;
  }
  hyp.score = hyp.log_prob;
  return hyp;
}

double coverage_term(const Eigen::MatrixXd& attention) {
  if (attention.rows() == 0) return 0.0;
  double total = 0.0;
  for (Index s = 0; s < attention.cols(); ++s) {
    total += std::log(std::clamp(attention.col(s).sum(), 1e-10, 1.0));
  }
  return total;
}

namespace {

struct BeamEntry {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  Eigen::MatrixXd attention;  // includes the EOS row once finished
  std::vector<DecoderState<float>> states;
  bool finished = false;
};

Index params_vocab(const ModelParams<float>& p) { return p.dims.target_vocab; }

double entry_score(const BeamEntry& e, const BeamConfig& config) {
  const double len = static_cast<double>(e.tokens.size() + (e.finished ? 1 : 0));
  const double norm = config.length_alpha == 0.0 ? 1.0 : std::pow(std::max(len, 1.0), config.length_alpha);
  double score = e.log_prob / norm;
  if (config.coverage_beta > 0.0) score += config.coverage_beta * coverage_term(e.attention);
  return score;
}

}  // namespace

Hypothesis beam_search(const Ensemble& ensemble, const std::vector<TokenId>& source,
                       const BeamConfig& config) {
  config.validate();
  if (ensemble.empty()) throw ConfigError("beam_search: empty ensemble");
  for (const auto* m : ensemble) {
    if (!m) throw ConfigError("beam_search: null ensemble member");
    if (!(m->dims == ensemble[0]->dims)) throw ConfigError("beam_search: ensemble members differ in shape");
  }
  Hypothesis best;
  best.attention.resize(0, static_cast<Index>(source.size()));
  const std::size_t max_len = config.max_length(source.size());
  if (source.empty() || max_len == 0) return best;

  std::vector<std::unique_ptr<DecoderSession<float>>> sessions;
  for (const auto* m : ensemble) sessions.push_back(std::make_unique<DecoderSession<float>>(*m, source));
  const double inv_k = 1.0 / static_cast<double>(ensemble.size());

  std::vector<BeamEntry> live(1);
  live[0].attention.resize(0, static_cast<Index>(source.size()));
  for (const auto& s : sessions) live[0].states.push_back(s->start());
  std::vector<BeamEntry> finished;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double log_prob;
  };

  for (std::size_t t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Candidate> candidates;
    std::vector<std::vector<DecoderState<float>>> next_states(live.size());
    std::vector<Eigen::VectorXd> step_attention(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const TokenId previous = live[h].tokens.empty() ? Vocabulary::kBos : live[h].tokens.back();
      Eigen::VectorXd log_probs;
      Eigen::VectorXd attention;
      if (sessions.size() == 1) {
        auto out = sessions[0]->step(live[h].states[0], previous);
        log_probs = std::move(out.log_probs);
        attention = std::move(out.attention);
        next_states[h].push_back(std::move(out.next));
      } else {
        // log of the mean member probability, shifted by the per-token max
        // so identical members reproduce the single-model values exactly.
        Eigen::MatrixXd member(params_vocab(*ensemble[0]), static_cast<Index>(sessions.size()));
        attention = Eigen::VectorXd::Zero(static_cast<Index>(source.size()));
        for (std::size_t k = 0; k < sessions.size(); ++k) {
          auto out = sessions[k]->step(live[h].states[k], previous);
          member.col(static_cast<Index>(k)) = out.log_probs;
          attention += out.attention;
          next_states[h].push_back(std::move(out.next));
        }
        const Eigen::VectorXd top = member.rowwise().maxCoeff();
        const Eigen::VectorXd mean =
            (member.colwise() - top).array().exp().rowwise().sum().matrix() * inv_k;
        log_probs = top + mean.array().log().matrix();
        attention *= inv_k;
      }
      step_attention[h] = std::move(attention);

      // Per-parent top-k, ties to the lower id.
      std::vector<TokenId> ids(static_cast<std::size_t>(log_probs.size()));
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<TokenId>(i);
      const std::size_t k = std::min(config.beam_size, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                        [&](TokenId a, TokenId b) {
                          return log_probs(a) > log_probs(b) || (log_probs(a) == log_probs(b) && a < b);
                        });
      for (std::size_t i = 0; i < k; ++i) {
        candidates.push_back({h, ids[i], live[h].log_prob + log_probs(ids[i])});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
    if (candidates.size() > config.beam_size) candidates.resize(config.beam_size);

    std::vector<BeamEntry> next_live;
    for (const auto& c : candidates) {
      BeamEntry e;
      e.tokens = live[c.parent].tokens;
      e.log_prob = c.log_prob;
      e.attention = live[c.parent].attention;
      append_row(e.attention, step_attention[c.parent]);
      if (c.token == Vocabulary::kEos) {
        e.finished = true;
        finished.push_back(std::move(e));
      } else {
        e.tokens.push_back(c.token);
        e.states = next_states[c.parent];
        next_live.push_back(std::move(e));
      }
    }
    live = std::move(next_live);
    if (finished.size() >= config.beam_size) break;
  }

  std::vector<BeamEntry>& pool = finished.empty() ? live : finished;
  const BeamEntry* winner = nullptr;
  double winner_score = -std::numeric_limits<double>::infinity();
  for (const auto& e : pool) {
    const double s = entry_score(e, config);
    if (!winner || s > winner_score) {
      winner = &e;
      winner_score = s;
    }
  }
  if (!winner) return best;
  best.tokens = winner->tokens;
  best.log_prob = winner->log_prob;
  best.score = winner_score;
  best.finished = winner->finished;
  best.attention = winner->attention.topRows(static_cast<Index>(winner->tokens.size()));
  return best;
}

Tokens extract_scored_segment(const Tokens& output, SegmentMode mode, const std::string& break_token) {
  if (mode == SegmentMode::All) {
    Tokens out;
    for (const auto& t : output) {
      if (t != break_token) out.push_back(t);
    }
    return out;
  }
  const auto last = std::find(output.rbegin(), output.rend(), break_token);
  if (last == output.rend()) return output;
  return Tokens(last.base(), output.end());
}

}  // namespace ctxnmt
