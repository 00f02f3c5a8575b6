#include "ctxnmt/attnstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"

namespace ctxnmt {

ModelKind parse_model_kind(const std::string& text) {
  if (text == "2+1") return ModelKind::TwoPlusOne;
  if (text == "2+2") return ModelKind::TwoPlusTwo;
  throw ConfigError("unknown model kind '" + text + "' (expected 2+1 or 2+2)");
}

namespace {

double sum_at(const std::vector<double>& w, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (auto i : idx) s += w[i];
  return s;
}

double max_at(const std::vector<double>& w, const std::vector<std::size_t>& idx) {
  double m = 0.0;
  for (auto i : idx) m = std::max(m, w[i]);
  return m;
}

}  // namespace

double PartitionedAttention::external_mass() const { return sum_at(weights, external); }
double PartitionedAttention::internal_mass() const { return sum_at(weights, internal); }
double PartitionedAttention::break_mass() const { return sum_at(weights, breaks); }
double PartitionedAttention::external_peak() const { return max_at(weights, external); }
double PartitionedAttention::internal_peak() const { return max_at(weights, internal); }

std::vector<PartitionedAttention> partition(const AttentionRecord& record,
                                            const RecordGeometry& geometry, ModelKind kind) {
  const std::size_t S = record.source_tokens.size();
  const std::size_t T = record.target_tokens.size();
  if (static_cast<std::size_t>(record.weights.rows()) != T ||
      static_cast<std::size_t>(record.weights.cols()) != S) {
    throw MalformedDataError("attention record: weight matrix does not match token counts");
  }
  if (geometry.source_focus_start > S) {
    throw MalformedDataError("attention record: focus start " + std::to_string(geometry.source_focus_start) +
                             " beyond source length " + std::to_string(S));
  }
  std::vector<std::size_t> breaks = geometry.source_breaks;
  std::sort(breaks.begin(), breaks.end());
  for (auto b : breaks) {
    if (b >= S) throw MalformedDataError("attention record: break position out of range");
  }

  // Segment index of every source position; breaks get npos.
  constexpr auto kBreak = static_cast<std::size_t>(-1);
  std::vector<std::size_t> segment(S, 0);
  std::size_t num_segments = 1;
  if (kind == ModelKind::TwoPlusTwo) {
    std::size_t seg = 0, next = 0;
    for (std::size_t s = 0; s < S; ++s) {
      if (next < breaks.size() && breaks[next] == s) {
        segment[s] = kBreak;
        ++seg;
        ++next;
      } else {
        segment[s] = seg;
      }
    }
    num_segments = breaks.size() + 1;
  }

  std::vector<PartitionedAttention> out;
  std::size_t target_segment = 0, position = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& token = record.target_tokens[t];
    if (kind == ModelKind::TwoPlusTwo && token == geometry.break_token) {
      ++target_segment;
      position = 0;
      continue;
    }
    PartitionedAttention p;
    p.word = lowercase(token);
    p.position = ++position;
    p.weights.resize(S);
    for (std::size_t s = 0; s < S; ++s) p.weights[s] = record.weights(static_cast<Index>(t), static_cast<Index>(s));
    if (kind == ModelKind::TwoPlusOne) {
      for (std::size_t s = 0; s < S; ++s) {
        (s < geometry.source_focus_start ? p.external : p.internal).push_back(s);
      }
    } else {
      const std::size_t own = std::min(target_segment, num_segments - 1);
      for (std::size_t s = 0; s < S; ++s) {
        if (segment[s] == kBreak) p.breaks.push_back(s);
        else if (segment[s] == own) p.internal.push_back(s);
        else p.external.push_back(s);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PartitionedAttention> partition_all(const std::vector<ExportedAttention>& records,
                                                ModelKind kind) {
  std::vector<PartitionedAttention> out;
  for (const auto& r : records) {
    auto parts = partition(r.record, {r.source_focus_start, r.source_breaks, r.break_token}, kind);
    out.insert(out.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return out;
}

namespace {

struct Accumulator {
  std::size_t freq = 0;
  double external = 0.0;
  double internal = 0.0;
  double position = 0.0;
};

WordTypeStats finish(const std::string& word, const Accumulator& a) {
  WordTypeStats s;
  s.word = word;
  s.freq = a.freq;
  if (a.freq == 0) return s;
  const double n = static_cast<double>(a.freq);
  s.external = a.external / n;
  s.internal = a.internal / n;
  const double denom = s.external + s.internal;
  s.proportion = denom > 0.0 ? 100.0 * s.external / denom : 0.0;
  s.mean_position = a.position / n;
  return s;
}

template <typename Ext, typename Int>
WordStatsTable word_stats(const std::vector<PartitionedAttention>& partitions, std::size_t min_freq,
                          Ext ext, Int in) {
  std::map<std::string, Accumulator> by_word;
  Accumulator all;
  for (const auto& p : partitions) {
    auto& a = by_word[p.word];
    const double e = ext(p), i = in(p);
    for (auto* acc : {&a, &all}) {
      ++acc->freq;
      acc->external += e;
      acc->internal += i;
      acc->position += static_cast<double>(p.position);
    }
  }
  WordStatsTable table;
  for (const auto& [word, acc] : by_word) {
    if (acc.freq >= min_freq) table.rows.push_back(finish(word, acc));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const WordTypeStats& a, const WordTypeStats& b) { return a.proportion > b.proportion; });
  table.average = finish("average", all);
  return table;
}

}  // namespace

WordStatsTable word_mass_stats(const std::vector<PartitionedAttention>& partitions, std::size_t min_freq) {
  return word_stats(
      partitions, min_freq, [](const PartitionedAttention& p) { return p.external_mass(); },
      [](const PartitionedAttention& p) { return p.internal_mass(); });
}

WordStatsTable word_peak_stats(const std::vector<PartitionedAttention>& partitions, std::size_t min_freq) {
  return word_stats(
      partitions, min_freq, [](const PartitionedAttention& p) { return p.external_peak(); },
      [](const PartitionedAttention& p) { return p.internal_peak(); });
}

std::vector<MajorityPeakStats> majority_peak_stats(const std::vector<PartitionedAttention>& partitions,
                                                   std::size_t min_cases, MajorityBasis basis) {
  std::map<std::string, MajorityPeakStats> by_word;
  for (const auto& p : partitions) {
    auto& s = by_word[p.word];
    ++s.freq;
    const bool external_wins = basis == MajorityBasis::Peak ? p.external_peak() > p.internal_peak()
                                                            : p.external_mass() > p.internal_mass();
    if (external_wins) ++s.count;
  }
  std::vector<MajorityPeakStats> rows;
  for (auto& [word, s] : by_word) {
    if (s.count < min_cases || s.count == 0) continue;
    s.word = word;
    s.proportion = static_cast<double>(s.count) / static_cast<double>(s.freq);
    rows.push_back(s);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MajorityPeakStats& a, const MajorityPeakStats& b) {
    return a.proportion > b.proportion;
  });
  return rows;
}

double corpus_external_proportion(const std::vector<PartitionedAttention>& partitions) {
  double ext = 0.0, in = 0.0;
  for (const auto& p : partitions) {
    ext += p.external_mass();
    in += p.internal_mass();
  }
  return ext + in > 0.0 ? ext / (ext + in) : 0.0;
}

namespace {

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

}  // namespace

std::string format_word_stats(const WordStatsTable& table) {
  std::string out = "word\tfreq\texternal\tinternal\tprop.%\tavg.pos\n";
  for (const auto& r : table.rows) {
    out += r.word + '\t' + std::to_string(r.freq) + '\t' + fixed(r.external, 3) + '\t' +
           fixed(r.internal, 3) + '\t' + fixed(r.proportion, 1) + '\t' + fixed(r.mean_position, 2) + '\n';
  }
  const auto& a = table.average;
  out += "average\t---\t" + fixed(a.external, 3) + '\t' + fixed(a.internal, 3) + '\t' +
         fixed(a.proportion, 1) + "\t---\n";
  return out;
}

std::string format_majority_stats(const std::vector<MajorityPeakStats>& rows) {
  std::string out = "word\tproportion\tfreq_ext_peak\tfreq\n";
  for (const auto& r : rows) {
    out += r.word + '\t' + fixed(r.proportion, 3) + '\t' + std::to_string(r.count) + '\t' +
           std::to_string(r.freq) + '\n';
  }
  return out;
}

std::string heatmap_tsv(const ExportedAttention& a) {
  const auto& rec = a.record;
  std::vector<bool> is_break(rec.source_tokens.size(), false);
  for (auto b : a.source_breaks) {
    if (b < is_break.size()) is_break[b] = true;
  }
  std::string out;
  for (std::size_t s = 0; s < rec.source_tokens.size(); ++s) {
    out += '\t';
    out += is_break[s] ? "||" : rec.source_tokens[s];
  }
  out += '\n';
  for (Index t = 0; t < rec.weights.rows(); ++t) {
    const auto& label = rec.target_tokens[static_cast<std::size_t>(t)];
    out += label == a.break_token ? "||" : label;
    for (Index s = 0; s < rec.weights.cols(); ++s) out += '\t' + fixed(rec.weights(t, s), 4);
    out += '\n';
  }
  return out;
}

std::string heatmap_pgm(const AttentionRecord& record) {
  const auto rows = record.weights.rows(), cols = record.weights.cols();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (Index t = 0; t < rows; ++t) {
    for (Index s = 0; s < cols; ++s) {
      const double w = std::clamp(record.weights(t, s), 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - w)))));
    }
  }
  return out;
}

}  // namespace ctxnmt
