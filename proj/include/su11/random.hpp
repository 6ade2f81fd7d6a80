#pragma once

// Counter-based random streams. Philox4x32-10 maps (counter, key) to four
// 32-bit words; a run's stream is fully determined by its 64-bit seed, so
// runs can execute in any order or on any worker and still reproduce.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace su11 {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// SplitMix64 finalizer, used only to spread (base_seed, index) into a key.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of run `index` in an ensemble started from `base_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return mix64(base_seed ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Stream of standard normal deviates (Box-Muller over Philox blocks).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  double operator()() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto w = Philox4x32::generate(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), 0u, 0u},
        key_);
    ++block_;
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform deviate on the open interval (0, 1).
  double uniform() noexcept {
    const auto w = Philox4x32::generate(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), 1u, 0u},
        key_);
    ++block_;
    return to_unit(w[0], w[1]);
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  static double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
    const std::uint64_t bits = ((std::uint64_t{a} << 32) | b) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace su11
