#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace risbf {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3").
///
/// A generator is addressed by (seed, stream): the seed forms the Philox key
/// and the 64-bit stream id occupies the upper half of the 128-bit counter,
/// so distinct streams can never collide regardless of how many values each
/// one consumes. This is what makes per-sample generation order-independent:
/// worker threads draw from disjoint streams and the output only depends on
/// the (seed, stream) pair.
class Philox {
 public:
  explicit Philox(uint64_t seed, uint64_t stream = 0) noexcept
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        ctr_{0U, 0U, static_cast<uint32_t>(stream),
             static_cast<uint32_t>(stream >> 32)} {}

  uint32_t next_u32() noexcept {
    if (buf_pos_ == 4) {
      fill_buffer();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  uint64_t next_u64() noexcept {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * pi() * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Circularly symmetric CN(0, 1): (x + jy)/sqrt(2), x,y iid N(0,1).
  std::complex<double> cnormal() noexcept {
    const double re = normal();
    const double im = normal();
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    return {re * inv_sqrt2, im * inv_sqrt2};
  }

  static constexpr double pi() noexcept { return 3.141592653589793238462643; }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static void mulhilo(uint32_t a, uint32_t b, uint32_t& hi,
                      uint32_t& lo) noexcept {
    const uint64_t prod = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(prod >> 32);
    lo = static_cast<uint32_t>(prod);
  }

  void fill_buffer() noexcept {
    std::array<uint32_t, 4> x = ctr_;
    std::array<uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(kMul0, x[0], hi0, lo0);
      mulhilo(kMul1, x[2], hi1, lo1);
      x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    buf_ = x;
    // 64-bit block index in the low counter words; the stream id above is
    // never touched.
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> ctr_;
  std::array<uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stream-id namespaces. Purpose tags keep independently seeded consumers
/// (dataset samples, weight init, shuffles, randomization draws, ...) on
/// non-overlapping streams even when they share a seed.
enum class StreamPurpose : uint64_t {
  kDatasetSample = 0,
  kNetworkInit = 1,
  kTrainShuffle = 2,
  kSdrSolve = 3,
  kEvalInstance = 4,
  kGeneric = 5,
};

inline Philox make_stream(uint64_t seed, StreamPurpose purpose,
                          uint64_t index = 0) noexcept {
  const uint64_t stream = (static_cast<uint64_t>(purpose) << 56) | index;
  return Philox(seed, stream);
}

}  // namespace risbf
