#pragma once

#include <cstdint>
#include <cmath>
#include <span>

namespace driftlab {

// Counter-based generator (Philox 4x32-10). Every draw is a pure function of
// (seed, stream, step, slot), so trajectories can be scheduled on any number
// of workers without changing the results. A stream is typically a trajectory
// or particle index, the step the integrator step.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  // Four raw 32-bit words for block index (step, block).
  void block(std::uint64_t step, std::uint32_t block_idx,
             std::uint32_t out[4]) const noexcept {
    std::uint32_t c0 = static_cast<std::uint32_t>(step);
    std::uint32_t c1 = static_cast<std::uint32_t>(step >> 32);
    std::uint32_t c2 = block_idx ^ stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(kMul0, c0, hi0, lo0);
      mulhilo(kMul1, c2, hi1, lo1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
  }

  // Uniform on (0,1]; slot enumerates draws within a step.
  double uniform(std::uint64_t step, std::uint32_t slot) const noexcept {
    std::uint32_t w[4];
    block(step, slot >> 1, w);
    std::uint64_t u = (slot & 1u) ? pack(w[2], w[3]) : pack(w[0], w[1]);
    return (static_cast<double>(u) + 1.0) * 0x1.0p-64;
  }

  // Standard normals via Box-Muller; pairs share one counter block.
  void fill_normals(std::uint64_t step, std::span<double> z) const noexcept {
    const std::size_t n = z.size();
    std::uint32_t w[4];
    for (std::size_t i = 0; i < n; i += 2) {
      block(step, static_cast<std::uint32_t>(i >> 1), w);
      const double u1 = (static_cast<double>(pack(w[0], w[1])) + 1.0) * 0x1.0p-64;
      const double u2 = static_cast<double>(pack(w[2], w[3])) * 0x1.0p-64;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 6.283185307179586476925286766559 * u2;
      z[i] = r * std::cos(a);
      if (i + 1 < n) z[i + 1] = r * std::sin(a);
    }
  }

  double normal(std::uint64_t step, std::uint32_t slot) const noexcept {
    std::uint32_t w[4];
    block(step, slot, w);
    const double u1 = (static_cast<double>(pack(w[0], w[1])) + 1.0) * 0x1.0p-64;
    const double u2 = static_cast<double>(pack(w[2], w[3])) * 0x1.0p-64;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }
  static std::uint64_t pack(std::uint32_t a, std::uint32_t b) noexcept {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
};

// Mixes experiment-level labels into substream ids (splitmix64 finalizer).
inline std::uint64_t mix_stream(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 1);
  x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27; x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

}  // namespace driftlab
