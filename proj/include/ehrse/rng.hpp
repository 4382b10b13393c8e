#pragma once

#include <cstdint>
#include <random>

namespace ehrse {

/// Independent random substreams used inside one replication. Each simulated
/// step consumes exactly one draw from each of the first three streams no
/// matter which policy runs, so different policies see common random numbers.
enum class Substream : std::uint32_t {
  kEnvironment = 0,
  kHarvest = 1,
  kChannel = 2,
  kPlant = 3,
};

/// Deterministic random stream.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq with the words
/// (seed_lo, seed_hi, rep_lo, rep_hi, substream). Both algorithms are fully
/// specified by the standard, so a given (master_seed, replication, substream)
/// triple reproduces the same sequence on every conforming implementation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t master_seed, std::uint64_t replication,
                             Substream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(replication >> 32),
                      static_cast<std::uint32_t>(stream)};
    RandomStream out(0);
    out.engine_.seed(seq);
    return out;
  }

  /// Uniform double in [0, 1) built from the top 53 bits of one engine output.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ehrse
