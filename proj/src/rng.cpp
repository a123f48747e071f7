#include "bwpart/rng.hpp"

namespace bwpart {

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  return mix64(seed ^ mix64(purpose + 0x632be59bd9b4e019ULL));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(seed ^ mix64(stream + kGamma))) {}

}  // namespace bwpart
