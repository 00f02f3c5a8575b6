#include "ctxnmt/model.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ctxnmt {

template struct ModelParams<float>;
template struct ModelParams<double>;

void HyperParams::validate() const {
  if (embed_dim < 1 || hidden_dim < 1 || attention_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (max_source_len < 1 || max_target_len < 1) throw ConfigError("maximum lengths must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a positive finite number");
  }
}

GradCheckResult grad_check(const ModelParams<double>& params, const IdPair& example, double epsilon,
                           std::size_t min_coordinates, std::uint64_t seed) {
  const auto analytic = backward(params, example);
  Rng rng = Rng::stream(seed, "gradcheck");
  // Spread the budget evenly, smallest tensors first, so that tensors too
  // small for their share pass the remainder on to larger ones.
  std::vector<std::size_t> order(ModelParams<double>::kNumTensors);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (params.*ModelParams<double>::kTensors[a].second).size() <
           (params.*ModelParams<double>::kTensors[b].second).size();
  });
  std::vector<std::size_t> quota(order.size(), 0);
  std::size_t remaining = min_coordinates;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto size = static_cast<std::size_t>((params.*ModelParams<double>::kTensors[order[k]].second).size());
    const std::size_t left = order.size() - k;
    quota[order[k]] = std::min(size, (remaining + left - 1) / left);
    remaining -= std::min(remaining, quota[order[k]]);
  }

  GradCheckResult result;
  ModelParams<double> probe = params;
  for (std::size_t t = 0; t < ModelParams<double>::kNumTensors; ++t) {
    const auto& [name, member] = ModelParams<double>::kTensors[t];
    Matrix<double>& m = probe.*member;
    const Matrix<double>& a = analytic.*member;
    const auto size = static_cast<std::size_t>(m.size());
    std::set<std::size_t> picked;
    const std::size_t want = quota[t];
    while (picked.size() < want) picked.insert(rng.below(size));
    for (const auto flat : picked) {
      const Index idx = static_cast<Index>(flat);
      const Index r = idx % m.rows(), c = idx / m.rows();
      const double original = m(r, c);
      m(r, c) = original + epsilon;
      const double plus = forward_loss(probe, example).loss;
      m(r, c) = original - epsilon;
      const double minus = forward_loss(probe, example).loss;
      m(r, c) = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = a(r, c);
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      const double rel = std::abs(numeric - exact) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = name;
      }
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace ctxnmt
