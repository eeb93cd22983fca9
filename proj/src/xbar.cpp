#include "topkima/xbar.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace topkima {

CrossbarTile::CrossbarTile(IntMatrix weights, int physical_rows,
                           int physical_cols, int replica_rows,
                           int cells_per_weight, int weight_limit, int sub_k)
    : weights_(std::move(weights)),
      physical_rows_(physical_rows),
      physical_cols_(physical_cols),
      replica_rows_(replica_rows),
      cells_per_weight_(cells_per_weight),
      weight_limit_(weight_limit),
      sub_k_(sub_k) {
  if (physical_rows_ < 1 || physical_cols_ < 1)
    throw std::invalid_argument("CrossbarTile: physical dims must be positive");
  if (replica_rows_ < 0)
    throw std::invalid_argument("CrossbarTile: replica_rows must be >= 0");
  if (cells_per_weight_ < 1 || weight_limit_ < 1)
    throw std::invalid_argument("CrossbarTile: invalid weight precision");
  const long long used_rows =
      static_cast<long long>(weights_.rows()) * cells_per_weight_ + replica_rows_;
  if (used_rows > physical_rows_)
    throw std::invalid_argument(
        "CrossbarTile: weight rows * cells + replica rows exceed physical rows (" +
        std::to_string(used_rows) + " > " + std::to_string(physical_rows_) + ")");
  if (static_cast<int>(weights_.cols()) > physical_cols_)
    throw std::invalid_argument("CrossbarTile: more columns than physical columns");
  if (sub_k_ < 0 || sub_k_ > static_cast<int>(weights_.cols()))
    throw std::invalid_argument("CrossbarTile: sub_k outside [0, #columns]");
  for (int w : weights_.data())
    if (w < -weight_limit_ || w > weight_limit_)
      throw std::invalid_argument("CrossbarTile: stored weight outside limit");
}

std::vector<long long> ideal_mac(std::span<const int> q,
                                 const CrossbarTile& tile) {
  if (static_cast<int>(q.size()) != tile.rows())
    throw std::invalid_argument("ideal_mac: input length != tile rows");
  std::vector<long long> out(tile.cols(), 0);
  for (int i = 0; i < tile.rows(); ++i) {
    const long long qi = q[i];
    if (qi == 0) continue;
    const int* wrow = tile.weights().row_ptr(i);
    for (int j = 0; j < tile.cols(); ++j) out[j] += qi * wrow[j];
  }
  return out;
}

void add_gaussian_noise(std::span<double> values, double sigma,
                        std::uint64_t seed) {
  if (sigma < 0.0)
    throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : values) v += dist(gen);
}

std::vector<double> noisy_mac(std::span<const int> q, const CrossbarTile& tile,
                              double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("noisy_mac: sigma must be >= 0");
  const auto exact = ideal_mac(q, tile);
  std::vector<double> out(exact.begin(), exact.end());
  add_gaussian_noise(out, sigma, seed);
  return out;
}

}  // namespace topkima
