#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "topkima/matrix.hpp"

namespace topkima {

// One SRAM crossbar sub-array holding an encoded slice of K^T.
// Logical weight rows occupy cells_per_weight physical rows each; replica
// rows are reserved for ramp generation and calibration and never store
// weights. Tiles are immutable after construction; MAC calls are read-only.
class CrossbarTile {
 public:
  CrossbarTile(IntMatrix weights, int physical_rows = 256,
               int physical_cols = 256, int replica_rows = 64,
               int cells_per_weight = 3, int weight_limit = 7, int sub_k = 0);

  const IntMatrix& weights() const { return weights_; }
  int rows() const { return static_cast<int>(weights_.rows()); }
  int cols() const { return static_cast<int>(weights_.cols()); }
  int physical_rows() const { return physical_rows_; }
  int physical_cols() const { return physical_cols_; }
  int replica_rows() const { return replica_rows_; }
  int cells_per_weight() const { return cells_per_weight_; }
  int weight_limit() const { return weight_limit_; }
  int sub_k() const { return sub_k_; }

 private:
  IntMatrix weights_;
  int physical_rows_;
  int physical_cols_;
  int replica_rows_;
  int cells_per_weight_;
  int weight_limit_;
  int sub_k_;
};

// Exact signed integer MAC: out[j] = sum_i q[i] * W[i][j].
std::vector<long long> ideal_mac(std::span<const int> q,
                                 const CrossbarTile& tile);

// Adds i.i.d. zero-mean Gaussian noise (stddev sigma) to each value, drawing
// sequentially from a generator seeded with `seed`. sigma == 0 leaves the
// values untouched.
void add_gaussian_noise(std::span<double> values, double sigma,
                        std::uint64_t seed);

// ideal_mac with per-output analog error injection; same seed, same result.
std::vector<double> noisy_mac(std::span<const int> q, const CrossbarTile& tile,
                              double sigma, std::uint64_t seed);

}  // namespace topkima
