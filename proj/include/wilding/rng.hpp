#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace wilding {

// Independent streams derived from one user seed. Every random decision in a
// run goes through one of these so a single seed reproduces the whole run.
enum class Stream : std::uint64_t {
  Init = 1,
  Shuffle = 2,
  Partition = 3,
  Search = 4,
  Synth = 5,
};

/// splitmix64 finalizer over (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) noexcept;

/// mt19937_64 with distribution code written out explicitly. The standard
/// distributions are implementation-defined, so using them would tie the
/// bit pattern of a run to one standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Uniform integer in [0, n), rejection-sampled; n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wilding
