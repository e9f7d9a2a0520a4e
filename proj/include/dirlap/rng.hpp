#pragma once

#include <cmath>
#include <cstdint>

namespace dirlap {

// Deterministic splittable RNG (splitmix64 core). Every random choice in the
// library flows from a single 64-bit seed through child() derivations, so a
// fixed seed reproduces byte-identical results regardless of call interleaving
// elsewhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random bits
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    // multiply-shift; bias is negligible for the n used here (n << 2^64)
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  // standard normal via Box-Muller (no caching: two uniforms per call keeps
  // the stream position independent of call history)
  double next_normal() {
    double u1 = next_double(), u2 = next_double();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // sign in {-1, +1}
  double next_sign() { return (next_u64() & 1) ? 1.0 : -1.0; }

  // independent child stream; label namespaces usages, index enumerates them
  Rng child(std::uint64_t label, std::uint64_t index = 0) const {
    Rng r(state_ ^ (0x94d049bb133111ebULL * (label + 1)));
    std::uint64_t h = r.next_u64() ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(h);
  }

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

}  // namespace dirlap
