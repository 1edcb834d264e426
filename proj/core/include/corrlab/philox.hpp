#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace corrlab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A pure
/// function of (counter, key); distinct counters give independent blocks.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter c, Key k) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return c;
  }

  static constexpr Key key_from(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }
};

/// Uniform on the open interval (0, 1) from 64 random bits, 53-bit resolution.
inline double uniform_open01(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal from one Philox block via Box-Muller (cosine branch).
inline double normal_from_block(const Philox4x32::Counter& r) noexcept {
  const double u1 = uniform_open01((std::uint64_t{r[1]} << 32) | r[0]);
  const double u2 = uniform_open01((std::uint64_t{r[3]} << 32) | r[2]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Stream tags occupying the last counter word; keep the domains disjoint.
enum class StreamTag : std::uint32_t {
  environment = 0,
  bootstrap = 1,
  anchors = 2,
  noise_floor = 3,
  test_data = 4,
};

/// Sequential view of a Philox substream keyed by (seed, tag, stream id).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, StreamTag tag, std::uint32_t stream_id)
      : key_(Philox4x32::key_from(seed)), tag_(static_cast<std::uint32_t>(tag)), stream_(stream_id) {}

  std::uint64_t next_u64() noexcept {
    const auto r = Philox4x32::block({static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), stream_, tag_},
                                     key_);
    ++counter_;
    return (std::uint64_t{r[1]} << 32) | r[0];
  }

  double uniform() noexcept { return uniform_open01(next_u64()); }

  double normal() noexcept {
    const auto r = Philox4x32::block({static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), stream_, tag_},
                                     key_);
    ++counter_;
    return normal_from_block(r);
  }

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t tag_;
  std::uint32_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace corrlab
