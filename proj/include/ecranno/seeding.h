#ifndef ECRANNO_SEEDING_H_
#define ECRANNO_SEEDING_H_

#include <cstdint>
#include <string_view>

namespace ecranno {

// Stateless mixing used for every random decision in the engine, so a
// single 64-bit seed reproduces any output.

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the bytes of `s`.
constexpr uint64_t HashString(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent sub-seed for a named purpose. Streams in use:
//   1: Random scorer, 2: fractional-k draws.
constexpr uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  return Mix64(seed ^ Mix64(stream * 0xd1b54a32d192ed03ULL));
}

inline constexpr uint64_t kScorerStream = 1;
inline constexpr uint64_t kPruneStream = 2;

// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double UnitInterval(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace ecranno

#endif  // ECRANNO_SEEDING_H_
