#pragma once

#include <cmath>
#include <cstdint>

namespace fnls {

// Philox-4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// Every random number in the project is a pure function of
// (seed, stream, index_a, index_b, index_c), so draws are bitwise
// reproducible and independent of evaluation order.

struct PhiloxBlock {
  uint32_t x[4];
};

namespace detail {

inline void philox_round(uint32_t c[4], uint32_t k0, uint32_t k1) {
  const uint64_t p0 = uint64_t(0xD2511F53u) * c[0];
  const uint64_t p1 = uint64_t(0xCD9E8D57u) * c[2];
  const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
  const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
  c[0] = hi1 ^ c[1] ^ k0;
  c[1] = lo1;
  c[2] = hi0 ^ c[3] ^ k1;
  c[3] = lo0;
}

}  // namespace detail

inline PhiloxBlock philox4x32(uint32_t c0, uint32_t c1, uint32_t c2,
                              uint32_t c3, uint32_t k0, uint32_t k1) {
  uint32_t c[4] = {c0, c1, c2, c3};
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    detail::philox_round(c, k0, k1);
  }
  return PhiloxBlock{{c[0], c[1], c[2], c[3]}};
}

// Disjoint sub-streams; stored in the top byte of the last counter word.
enum class RngStream : uint32_t {
  noise = 0,        // Wiener increments: (step, trajectory, mode)
  fields = 1,       // random test/sample fields: (sample, context, mode)
  scalars = 2,      // misc scalar draws: (index, context, slot)
};

inline double u64_to_open_unit(uint64_t v) {
  // (0,1), never 0: safe under log()
  return double(v >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

struct NormalPair {
  double g0, g1;
};

// One Philox block -> two independent N(0,1) draws (Box-Muller).
inline NormalPair normal_pair(uint64_t seed, RngStream stream, uint64_t index_a,
                              uint32_t index_b, uint32_t index_c) {
  const uint32_t c3 = (uint32_t(stream) << 24) | (index_c & 0x00FFFFFFu);
  const PhiloxBlock b =
      philox4x32(uint32_t(index_a), uint32_t(index_a >> 32), index_b, c3,
                 uint32_t(seed), uint32_t(seed >> 32));
  const uint64_t a = (uint64_t(b.x[0]) << 32) | b.x[1];
  const uint64_t c = (uint64_t(b.x[2]) << 32) | b.x[3];
  const double u1 = u64_to_open_unit(a);
  const double u2 = u64_to_open_unit(c);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 6.283185307179586476925286766559 * u2;
  return NormalPair{r * std::cos(th), r * std::sin(th)};
}

inline double uniform_draw(uint64_t seed, RngStream stream, uint64_t index_a,
                           uint32_t index_b, uint32_t index_c) {
  const uint32_t c3 = (uint32_t(stream) << 24) | (index_c & 0x00FFFFFFu);
  const PhiloxBlock b =
      philox4x32(uint32_t(index_a), uint32_t(index_a >> 32), index_b, c3,
                 uint32_t(seed), uint32_t(seed >> 32));
  return u64_to_open_unit((uint64_t(b.x[0]) << 32) | b.x[1]);
}

}  // namespace fnls
