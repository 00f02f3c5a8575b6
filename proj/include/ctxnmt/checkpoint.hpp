#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "ctxnmt/model.hpp"
#include "ctxnmt/vocab.hpp"

namespace ctxnmt {

inline constexpr int kCheckpointFormatVersion = 1;

/// A trained (or initial) model with everything needed to decode with it.
struct Checkpoint {
  HyperParams hyper;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  ModelParams<float> params;
  std::size_t step = 0;

  bool operator==(const Checkpoint& other) const {
    return hyper == other.hyper && source_vocab == other.source_vocab &&
           target_vocab == other.target_vocab && params == other.params && step == other.step;
  }
};

/// Self-describing container: a text header (format version, step,
/// hyperparameters, both vocabularies) followed by named tensors, each
/// with its shape and column-major little-endian float32 payload.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Validates every tensor shape against the header; throws MalformedDataError.
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

ModelDims dims_for(const HyperParams& hp, const Vocabulary& source, const Vocabulary& target);

}  // namespace ctxnmt
