#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ctxnmt/attention_io.hpp"
#include "ctxnmt/checkpoint.hpp"
#include "ctxnmt/config.hpp"
#include "ctxnmt/corpus.hpp"
#include "ctxnmt/decode.hpp"
#include "ctxnmt/eval.hpp"
#include "ctxnmt/subword.hpp"

namespace ctxnmt {

inline constexpr const char* kToolkitVersion = "1.0.0";
inline constexpr int kBpeFormatVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMalformedData = 3,
  kExitNumeric = 4,
};

// --- pipeline building blocks ---------------------------------------------

struct DataSplit {
  std::vector<TranslationUnit> train;
  std::vector<TranslationUnit> test;
};

/// Holds out the last ceil(fraction * documents) documents, at least one,
/// keeping at least one for training.
DataSplit split_documents(const std::vector<TranslationUnit>& units, double test_fraction);

/// BPE models learned on unmarked training text. With `joint` both sides
/// share one model learned on the concatenation.
struct SubwordModels {
  BpeModel source;
  BpeModel target;
};
SubwordModels learn_subwords(const std::vector<TranslationUnit>& train, const BpeConfig& config,
                             const ContextConfig& context);
std::vector<TranslationUnit> segment_units(const std::vector<TranslationUnit>& units, const SubwordModels& models,
                                           std::size_t vocab_threshold);

/// Word-level tokens of a decoder output: segments split at break tokens,
/// subwords re-joined per segment (a dangling marker is dropped), then the
/// last segment or all segments concatenated.
Tokens detokenize(const Tokens& subwords, SegmentMode mode, const std::string& break_token,
                  const std::string& join_marker);

struct Translation {
  Tokens tokens;
  AttentionRecord attention;
  bool finished = true;
};

/// Beam search with the checkpoint ensemble over every example, run on
/// `threads` workers; results are in input order whatever the thread count.
std::vector<Translation> translate_examples(const std::vector<Checkpoint>& ensemble,
                                            const std::vector<ExtendedExample>& examples, const BeamConfig& beam,
                                            std::size_t threads);

std::vector<ExportedAttention> export_records(const std::vector<Translation>& translations,
                                              const std::vector<ExtendedExample>& examples,
                                              const std::string& break_token);

struct SystemResult {
  std::string name;
  ContextConfig context;
  std::vector<std::filesystem::path> checkpoints;
  std::vector<Tokens> raw_outputs;       // subword output including breaks
  std::vector<Tokens> focus_outputs;     // scored segment, word level
  std::vector<Tokens> extended_outputs;  // sliding-window regime, word level
  std::size_t truncated = 0;
  std::optional<double> external_proportion;
  std::optional<std::string> training_failure;
};

struct PipelineResult {
  DataSplit data;
  std::vector<SystemResult> systems;
  std::vector<PronounOccurrence> occurrences;
  PronounTable pronoun_table;
  MajorityRate majority;
  std::vector<std::filesystem::path> outputs;  // every file written, relative to the output dir
};

/// Data preparation, BPE, training, decoding, attention analysis and
/// evaluation for every configured system. All files go below
/// config.paths.out.
PipelineResult run_pipeline(const RunConfig& config, std::ostream& log);

// --- command line -----------------------------------------------------------

/// Full command-line entry point. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxnmt
