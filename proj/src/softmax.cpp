#include "topkima/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topkima {

std::vector<double> SparseScores::to_dense() const {
  std::vector<double> dense(dim, 0.0);
  for (const auto& [idx, p] : entries) dense[idx] = p;
  return dense;
}

std::vector<double> softmax_full(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("softmax_full: empty input");
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("softmax_full: non-finite input");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

SparseScores softmax_topk(std::span<const std::pair<int, double>> winners,
                          int d) {
  if (winners.empty()) throw std::invalid_argument("softmax_topk: no winners");
  if (static_cast<int>(winners.size()) > d)
    throw std::invalid_argument("softmax_topk: more winners than positions");
  std::vector<bool> seen(d, false);
  double m = winners[0].second;
  for (const auto& [idx, v] : winners) {
    if (idx < 0 || idx >= d)
      throw std::invalid_argument("softmax_topk: index out of range");
    if (seen[idx])
      throw std::invalid_argument("softmax_topk: duplicate index " +
                                  std::to_string(idx));
    seen[idx] = true;
    if (!std::isfinite(v))
      throw std::invalid_argument("softmax_topk: non-finite value");
    m = std::max(m, v);
  }

  SparseScores s;
  s.dim = d;
  s.entries.reserve(winners.size());
  double sum = 0.0;
  for (const auto& [idx, v] : winners) {
    const double e = std::exp(v - m);
    s.entries.emplace_back(idx, e);
    sum += e;
  }
  for (auto& [idx, p] : s.entries) p /= sum;
  return s;
}

std::vector<int> topk_indices(std::span<const double> x, int k) {
  const int d = static_cast<int>(x.size());
  if (k < 1 || k > d)
    throw std::invalid_argument("topk_indices: k must be in [1, d]");
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] > x[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

SparseScores dtopk_reference(std::span<const double> x, int k) {
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("dtopk_reference: non-finite input");
  const auto idx = topk_indices(x, k);
  std::vector<std::pair<int, double>> winners;
  winners.reserve(idx.size());
  for (int i : idx) winners.emplace_back(i, x[i]);
  return softmax_topk(winners, static_cast<int>(x.size()));
}

}  // namespace topkima
