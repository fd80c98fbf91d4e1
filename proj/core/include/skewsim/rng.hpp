#pragma once

#include <cstdint>

namespace skewsim::rng {

// Counter-based generator: every draw is a pure function of
// (seed, time index, component index). There is no sequential state, so
// payload(t) is computable without drawing payloads 0..t-1, windows of any
// radius reproduce bit-identically, and fills can run in parallel.
//
// The mixer is the splitmix64 finalizer; three chained rounds with the key
// material injected between rounds. Empirical quality is covered by the
// moment tests in tests/unit/test_rng.cpp.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ (b * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
  return h;
}

// Derive an independent child seed (splittable streams: per product factor,
// per ensemble member, ...).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + salt);
}

// Uniform double in [0, 1), 53 random bits.
inline double u01(std::uint64_t seed, std::int64_t t, std::uint32_t component) {
  const std::uint64_t bits = keyed(seed, static_cast<std::uint64_t>(t), component);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace skewsim::rng
