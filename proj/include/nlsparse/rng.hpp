#ifndef NLSPARSE_RNG_HPP_
#define NLSPARSE_RNG_HPP_

#include <cstdint>
#include <vector>

namespace nlsparse {

/// Independent streams drawn for one trial.
enum class StreamPurpose : std::uint64_t {
  matrix = 1,
  signal = 2,
  noise = 3,
  probe = 4,
};

/// Counter-based generator. The i-th 64-bit output is
/// splitmix64_finalize(key + (i+1) * 0x9E3779B97F4A7C15), where the key is
/// derived by hashing (master seed, trial index, purpose). Outputs depend on
/// nothing but those three values and the counter, so streams are portable
/// and can be created independently on any thread.
///
/// Normal deviates use the Box-Muller transform on 53-bit uniforms; the
/// standard library distributions are avoided because their algorithms are
/// implementation-defined.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t trial_index, StreamPurpose purpose);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on (0, 1].
  double uniform_open_zero();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  double normal();

  /// k distinct indices from [0, n), in the order drawn (partial Fisher-Yates).
  std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);

}  // namespace nlsparse

#endif  // NLSPARSE_RNG_HPP_
