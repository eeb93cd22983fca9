#pragma once

#include <span>
#include <utility>
#include <vector>

namespace topkima {

// A distribution over d positions with at most k explicit entries; every
// omitted position is exactly zero.
struct SparseScores {
  int dim = 0;
  std::vector<std::pair<int, double>> entries;  // (index, probability)

  std::vector<double> to_dense() const;
};

// Max-stabilized softmax over the whole vector.
std::vector<double> softmax_full(std::span<const double> x);

// Softmax over the k winners only; the denominator contains k terms and all
// other positions stay zero.
SparseScores softmax_topk(std::span<const std::pair<int, double>> winners,
                          int d);

// Indices of the k largest values, ties broken toward the smaller index,
// ordered by (value descending, index ascending).
std::vector<int> topk_indices(std::span<const double> x, int k);

// Sort-based reference: select the k largest then softmax over them. Serves
// as the oracle for the ramp-conversion path.
SparseScores dtopk_reference(std::span<const double> x, int k);

}  // namespace topkima
