#pragma once

#include <cstdint>
#include <random>

#include "topkima/matrix.hpp"

namespace topkima {

// splitmix64 finalizer; used to derive independent stream seeds so results
// do not depend on the order in which rows/heads/tiles are processed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(a, mix64(b, c));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
  return mix64(a, mix64(b, mix64(c, d)));
}

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed,
                       double stddev = 1.0);

}  // namespace topkima
