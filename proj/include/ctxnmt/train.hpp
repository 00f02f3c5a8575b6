#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ctxnmt/checkpoint.hpp"
#include "ctxnmt/corpus.hpp"
#include "ctxnmt/model.hpp"

namespace ctxnmt {

/// Vocabularies plus id-encoded pairs ready for training.
struct TrainingSet {
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  std::vector<IdPair> pairs;
  std::size_t skipped = 0;  // empty sources or over-length examples
};

/// Builds vocabularies (capped at `vocab_cap` entries, 0 = unlimited) from
/// the examples and encodes them. Examples longer than the configured
/// maxima or with an empty source are skipped.
TrainingSet make_training_set(const std::vector<ExtendedExample>& examples, const HyperParams& hp,
                              std::size_t vocab_cap = 0);

/// Encodes examples against existing vocabularies (unknown tokens -> UNK).
std::vector<IdPair> encode_examples(const std::vector<ExtendedExample>& examples,
                                    const Vocabulary& source_vocab, const Vocabulary& target_vocab);

struct SavepointSchedule {
  /// Save every N optimizer steps; 0 saves only at the end of training.
  std::size_t every_steps = 0;
};

struct TrainResult {
  std::vector<Checkpoint> checkpoints;
  std::vector<double> step_losses;   // mean batch loss per optimizer step
  std::vector<double> epoch_losses;  // mean example loss per epoch
  /// Set when training stopped on a numeric failure; the last checkpoint
  /// then holds the last good parameters.
  std::optional<std::string> failure;
};

/// Minibatch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the mean token
/// cross-entropy. Single-threaded and deterministic given hp.rng_seed.
/// With zero epochs only the initialization checkpoint is returned.
TrainResult train(const TrainingSet& data, const HyperParams& hp, const SavepointSchedule& schedule);

/// Same, starting from given parameters (used by tests).
TrainResult train_from(ModelParams<float> params, const TrainingSet& data, const HyperParams& hp,
                       const SavepointSchedule& schedule);

}  // namespace ctxnmt
