#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcd {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the named substream `name`/`index` under `root`. Different names
/// or indices give unrelated streams; the mapping is stable across runs.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the name
  for (unsigned char ch : name) h = (h ^ ch) * 0x100000001b3ULL;
  return mix64(mix64(root ^ h) + index);
}

inline std::mt19937_64 substream(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(root, name, index));
}

}  // namespace pcd
