#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace eigenrank {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over `bytes`, folded with `seed` through mix64. Stable across
/// platforms; used to key per-(model, case) streams.
std::uint64_t hash_bytes(std::uint64_t seed, std::string_view bytes) noexcept;

/// Derives an independent stream key for one (purpose, index) use of a seed,
/// so that e.g. the third training call never shares draws with the
/// initialization shuffle.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t index = 0) noexcept;

/// Counter-based random stream. Output n is mix64(key + (n+1)·golden), so a
/// stream is fully described by its key and position and any split is
/// reproducible regardless of execution order.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;

  /// Uniform integer on [0, n), unbiased. n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace eigenrank
