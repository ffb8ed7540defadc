#ifndef SMAXDG_RNG_HPP
#define SMAXDG_RNG_HPP

#include <cstdint>

namespace smaxdg {

// splitmix64 finalizer; the basis of the counter-based generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL));
}

// Uniform in (0,1), open at both ends.
inline double uniform01(std::uint64_t key) {
  return (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse standard normal CDF (Wichura's AS241, double precision).
double inv_normal_cdf(double p);

// One standard normal draw keyed by (seed, path, stream, mode, denom, index):
// stateless, order-independent, bitwise reproducible.
inline double normal_draw(std::uint64_t seed, std::int64_t path, std::uint64_t stream,
                          std::int64_t mode, std::int64_t denom, std::int64_t index) {
  std::uint64_t h = mix64(seed);
  h = hash_combine(h, static_cast<std::uint64_t>(path));
  h = hash_combine(h, stream);
  h = hash_combine(h, static_cast<std::uint64_t>(mode));
  h = hash_combine(h, static_cast<std::uint64_t>(denom));
  h = hash_combine(h, static_cast<std::uint64_t>(index));
  return inv_normal_cdf(uniform01(h));
}

}  // namespace smaxdg

#endif
