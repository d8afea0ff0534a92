#pragma once

#include <cstdint>
#include <random>

namespace convlab {

/// Random stream keyed by (seed, stream index).
///
/// Each stream owns an independently seeded Mersenne Twister so that
/// realization i of an experiment draws the same numbers no matter which
/// thread runs it or in which order.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        0x636f6e76u};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }

  double uniform() { return uniform_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace convlab
