#include "ctxnmt/train.hpp"

#include <cmath>

#include "ctxnmt/error.hpp"
#include "ctxnmt/rng.hpp"

namespace ctxnmt {

TrainingSet make_training_set(const std::vector<ExtendedExample>& examples, const HyperParams& hp,
                              std::size_t vocab_cap) {
  std::vector<const ExtendedExample*> kept;
  TrainingSet set;
  for (const auto& e : examples) {
    if (e.source.empty() || e.source.size() > hp.max_source_len || e.target.size() > hp.max_target_len) {
      ++set.skipped;
      continue;
    }
    kept.push_back(&e);
  }
  std::vector<Tokens> src, trg;
  for (const auto* e : kept) {
    src.push_back(e->source);
    trg.push_back(e->target);
  }
  set.source_vocab = Vocabulary::build(src, vocab_cap);
  set.target_vocab = Vocabulary::build(trg, vocab_cap);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    set.pairs.push_back({set.source_vocab.encode(src[i]), set.target_vocab.encode(trg[i])});
  }
  return set;
}

std::vector<IdPair> encode_examples(const std::vector<ExtendedExample>& examples,
                                    const Vocabulary& source_vocab, const Vocabulary& target_vocab) {
  std::vector<IdPair> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({source_vocab.encode(e.source), target_vocab.encode(e.target)});
  return out;
}

namespace {

struct Adam {
  explicit Adam(const ModelDims& dims)
      : m(ModelParams<float>::zeros(dims)), v(ModelParams<float>::zeros(dims)) {}

  void update(ModelParams<float>& params, const ModelParams<float>& grads, double lr) {
    ++t;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const auto c1 = static_cast<float>(1.0 - std::pow(b1, static_cast<double>(t)));
    const auto c2 = static_cast<float>(1.0 - std::pow(b2, static_cast<double>(t)));
    const auto rate = static_cast<float>(lr);
    for (const auto& [name, member] : ModelParams<float>::kTensors) {
      auto& p = params.*member;
      const auto& g = grads.*member;
      auto& mm = m.*member;
      auto& vv = v.*member;
      mm = static_cast<float>(b1) * mm + static_cast<float>(1 - b1) * g;
      vv = static_cast<float>(b2) * vv + static_cast<float>(1 - b2) * g.cwiseProduct(g);
      p.array() -= rate * (mm.array() / c1) / ((vv.array() / c2).sqrt() + static_cast<float>(eps));
    }
  }

  ModelParams<float> m, v;
  std::size_t t = 0;
};

}  // namespace

TrainResult train(const TrainingSet& data, const HyperParams& hp, const SavepointSchedule& schedule) {
  hp.validate();
  Rng init_rng = Rng::stream(hp.rng_seed, "init");
  auto params = ModelParams<float>::initialized(
      dims_for(hp, data.source_vocab, data.target_vocab), init_rng);
  return train_from(std::move(params), data, hp, schedule);
}

TrainResult train_from(ModelParams<float> params, const TrainingSet& data, const HyperParams& hp,
                       const SavepointSchedule& schedule) {
  hp.validate();
  if (data.pairs.empty()) throw ConfigError("training corpus is empty");

  TrainResult result;
  const auto snapshot = [&](std::size_t step) {
    result.checkpoints.push_back({hp, data.source_vocab, data.target_vocab, params, step});
  };
  if (hp.epochs == 0) {
    snapshot(0);
    return result;
  }

  Rng shuffle_rng = Rng::stream(hp.rng_seed, "shuffle");
  Adam adam(params.dims);
  auto grads = ModelParams<float>::zeros(params.dims);
  std::vector<std::size_t> order(data.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      grads.set_zero();
      double batch_total = 0.0;
      try {
        for (std::size_t k = start; k < end; ++k) {
          batch_total += accumulate_gradient(params, data.pairs[order[k]], grads);
        }
        grads *= 1.0f / static_cast<float>(end - start);
        if (!grads.all_finite()) throw NumericError("non-finite gradient");
      } catch (const NumericError& e) {
        result.failure = std::string(e.what()) + " in epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(start / hp.batch_size) + " (step " + std::to_string(step + 1) + ")";
        snapshot(step);
        return result;
      }
      adam.update(params, grads, hp.learning_rate);
      ++step;
      epoch_total += batch_total;
      result.step_losses.push_back(batch_total / static_cast<double>(end - start));
      if (schedule.every_steps && step % schedule.every_steps == 0) snapshot(step);
    }
    result.epoch_losses.push_back(epoch_total / static_cast<double>(order.size()));
  }
  if (result.checkpoints.empty() || result.checkpoints.back().step != step) snapshot(step);
  return result;
}

}  // namespace ctxnmt
