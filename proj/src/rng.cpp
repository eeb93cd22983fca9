#include "topkima/rng.hpp"

namespace topkima {

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed,
                       double stddev) {
  Matrix m(rows, cols);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.data()) v = dist(gen);
  return m;
}

}  // namespace topkima
