#pragma once

#include <cstdint>
#include <string>

namespace fnls {

// FNV-1a 64-bit; used for config hashes and output-file checksums in the
// run manifest (integrity tags, not cryptographic).
inline uint64_t fnv1a64(const void* data, size_t len,
                        uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx",
           (unsigned long long)fnv1a64(s.data(), s.size()));
  return std::string(buf);
}

}  // namespace fnls
