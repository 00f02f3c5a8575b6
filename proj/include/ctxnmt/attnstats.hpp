#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ctxnmt/attention_io.hpp"
#include "ctxnmt/model.hpp"

namespace ctxnmt {

enum class ModelKind { TwoPlusOne, TwoPlusTwo };

ModelKind parse_model_kind(const std::string& text);

/// Input geometry of one attention record.
struct RecordGeometry {
  std::size_t source_focus_start = 0;
  std::vector<std::size_t> source_breaks;
  std::string break_token = "_BREAK_";
};

/// Attention of a single output token split into external (context or
/// other segments), internal (own segment) and break positions.
struct PartitionedAttention {
  std::string word;          // lowercased
  std::size_t position = 0;  // 1-based within its output segment
  std::vector<double> weights;
  std::vector<std::size_t> external;
  std::vector<std::size_t> internal;
  std::vector<std::size_t> breaks;

  double external_mass() const;
  double internal_mass() const;
  double break_mass() const;
  /// Maximum single weight over the set, 0 when the set is empty.
  double external_peak() const;
  double internal_peak() const;
};

/// 2+1: positions before the focus start are external. 2+2: source
/// segments are delimited by break positions; an output token belongs to
/// the segment numbered by the breaks generated before it (clamped to the
/// last source segment), and external positions are those of every other
/// segment. Output break tokens themselves produce no entry.
std::vector<PartitionedAttention> partition(const AttentionRecord& record,
                                            const RecordGeometry& geometry, ModelKind kind);

std::vector<PartitionedAttention> partition_all(const std::vector<ExportedAttention>& records,
                                                ModelKind kind);

/// Mean external/internal attention per word type (masses or peaks).
struct WordTypeStats {
  std::string word;
  std::size_t freq = 0;
  double external = 0.0;
  double internal = 0.0;
  double proportion = 0.0;  // 100 * external / (external + internal)
  double mean_position = 0.0;
};

/// Same layout, computed on per-occurrence peaks.
using PeakStats = WordTypeStats;

struct WordStatsTable {
  std::vector<WordTypeStats> rows;  // proportion descending, then word
  WordTypeStats average;            // micro-average over every occurrence
};

WordStatsTable word_mass_stats(const std::vector<PartitionedAttention>& partitions,
                               std::size_t min_freq = 5);
WordStatsTable word_peak_stats(const std::vector<PartitionedAttention>& partitions,
                               std::size_t min_freq = 5);

struct MajorityPeakStats {
  std::string word;
  std::size_t count = 0;  // occurrences with external > internal
  std::size_t freq = 0;
  double proportion = 0.0;  // count / freq
};

enum class MajorityBasis { Peak, Mass };

/// Words whose external attention beats internal attention in at least
/// `min_cases` occurrences, ranked by count / freq.
std::vector<MajorityPeakStats> majority_peak_stats(const std::vector<PartitionedAttention>& partitions,
                                                   std::size_t min_cases = 5,
                                                   MajorityBasis basis = MajorityBasis::Peak);

/// Total external mass over total external + internal mass.
double corpus_external_proportion(const std::vector<PartitionedAttention>& partitions);

std::string format_word_stats(const WordStatsTable& table);
std::string format_majority_stats(const std::vector<MajorityPeakStats>& rows);

/// Tab-separated grid: a label row of source tokens (break columns
/// labelled "||"), then one row per output token with its weights.
std::string heatmap_tsv(const ExportedAttention& a);
/// Binary PGM, one pixel per cell, weight 1 darkest.
std::string heatmap_pgm(const AttentionRecord& record);

}  // namespace ctxnmt
