#ifndef CDCNN_RNG_HPP_
#define CDCNN_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace cdcnn {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to fan a master seed out into independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(master ^ mix_seed(h));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(master ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

}  // namespace cdcnn

#endif  // CDCNN_RNG_HPP_
