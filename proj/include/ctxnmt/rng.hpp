#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxnmt {

/// Seeded random stream with a portable mapping from engine output to
/// values, so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent sub-stream derived from a base seed and a stream name
  /// ("init", "shuffle", "synth", ...).
  static Rng stream(std::uint64_t seed, std::string_view name) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed),
                                        static_cast<std::uint32_t>(seed >> 32)};
    for (char c : name) material.push_back(static_cast<unsigned char>(c));
    std::seed_seq seq(material.begin(), material.end());
    std::uint64_t words[2];
    std::uint32_t out[4];
    seq.generate(out, out + 4);
    words[0] = (std::uint64_t{out[0]} << 32) | out[1];
    words[1] = (std::uint64_t{out[2]} << 32) | out[3];
    return Rng(words[0] ^ (words[1] * 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ctxnmt
