#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctxnmt/attnstats.hpp"
#include "ctxnmt/corpus.hpp"
#include "ctxnmt/decode.hpp"
#include "ctxnmt/model.hpp"
#include "ctxnmt/subword.hpp"

namespace ctxnmt {

struct PathsConfig {
  // Training corpus. Empty source path together with synth.docs > 0 means
  // the corpus is generated.
  std::filesystem::path source, target, docs;
  // Optional held-out corpus; without it the last documents are held out.
  std::filesystem::path test_source, test_target, test_docs;
  std::filesystem::path out = "out";

  bool operator==(const PathsConfig&) const = default;
};

struct SynthConfig {
  std::size_t docs = 0;
  std::size_t units_per_doc = 10;

  bool operator==(const SynthConfig&) const = default;
};

struct AnalysisConfig {
  std::size_t min_freq = 5;
  std::size_t min_cases = 5;
  MajorityBasis majority_basis = MajorityBasis::Peak;
  std::string pronoun = "sie";

  bool operator==(const AnalysisConfig&) const = default;
};

struct RunConfig {
  PathsConfig paths;
  ContextConfig context = ContextConfig::two_plus_two();
  bool bpe_enabled = true;
  BpeConfig bpe;
  HyperParams hyper;
  std::size_t vocab_cap = 0;
  std::size_t savepoint_every = 0;
  std::size_t ensemble = 4;  // final savepoints averaged at decode time
  BeamConfig beam;
  AnalysisConfig analysis;
  SynthConfig synth;
  std::uint64_t seed = 1;
  std::vector<std::string> systems{"baseline", "2+1-break", "2+2"};
  double test_fraction = 0.1;
  std::size_t threads = 1;

  /// Propagates `seed` into the components that consume randomness.
  void apply_seed(std::uint64_t s);
  /// Throws ConfigError on invalid values.
  void validate() const;
  /// Checks that a corpus source is configured and every input file exists.
  void validate_inputs() const;
  bool operator==(const RunConfig&) const = default;
};

/// INI text with one section per module; round-trips losslessly.
std::string serialize_config(const RunConfig& config);
/// Unknown sections or keys are rejected. Missing keys keep their defaults.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

std::string to_string(MajorityBasis basis);
MajorityBasis parse_majority_basis(const std::string& text);

}  // namespace ctxnmt
