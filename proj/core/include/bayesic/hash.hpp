#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bayesic {

/// FNV-1a 64-bit over a byte string. Used for artifact fingerprints in run
/// manifests and config hashes in checkpoints.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes);

/// Fingerprint of a file's contents ("fnv1a64:<16 hex digits>").
/// Throws IoError if the file cannot be read.
std::string hash_file(const std::string& path);

}  // namespace bayesic
