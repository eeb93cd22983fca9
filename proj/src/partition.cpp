#include "topkima/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topkima {

nlohmann::json PartitionPlan::to_json() const {
  nlohmann::json tiles_json = nlohmann::json::array();
  for (const auto& t : tiles) {
    tiles_json.push_back({{"col_begin", t.col_begin},
                          {"col_end", t.col_end},
                          {"cells_per_weight", t.cells_per_weight},
                          {"weight_limit", t.weight_limit}});
  }
  return {{"tiles", tiles_json}, {"sub_k", sub_k}, {"total_k", total_k}};
}

PartitionPlan plan_partition(int d_cols, int d_rows, const QuantConfig& cfg,
                             std::pair<int, int> physical, int replica_rows,
                             int k) {
  cfg.validate();
  const auto [physical_rows, physical_cols] = physical;
  if (d_cols < 1 || d_rows < 1)
    throw std::invalid_argument("plan_partition: dimensions must be positive");
  if (physical_rows < 1 || physical_cols < 1)
    throw std::invalid_argument("plan_partition: physical dims must be positive");
  if (replica_rows < 0)
    throw std::invalid_argument("plan_partition: replica_rows must be >= 0");
  if (k < 1 || k > d_cols)
    throw std::invalid_argument("plan_partition: k must be in [1, d_cols]");

  const int mac_rows = physical_rows - replica_rows;
  const int cells = std::min(mac_rows / d_rows, cfg.cells_per_weight);
  if (cells < 1)
    throw std::invalid_argument(
        "plan_partition: cannot fit even ternary weights (" +
        std::to_string(d_rows) + " rows + " + std::to_string(replica_rows) +
        " replica rows > " + std::to_string(physical_rows) + ")");
  int weight_limit = 0;
  for (int c = 0; c < cells; ++c) weight_limit += cfg.cell_scales[c];

  PartitionPlan plan;
  plan.total_k = k;
  for (int begin = 0; begin < d_cols; begin += physical_cols) {
    TileSpec t;
    t.col_begin = begin;
    t.col_end = std::min(begin + physical_cols, d_cols);
    t.cells_per_weight = cells;
    t.weight_limit = weight_limit;
    plan.tiles.push_back(t);
  }

  // Largest-remainder allocation of k across tiles, proportional to column
  // counts; integer arithmetic keeps remainder comparisons exact.
  const int n = static_cast<int>(plan.tiles.size());
  plan.sub_k.assign(n, 0);
  std::vector<long long> remainder(n);
  int assigned = 0;
  for (int i = 0; i < n; ++i) {
    const long long scaled = static_cast<long long>(k) * plan.tiles[i].cols();
    plan.sub_k[i] = static_cast<int>(scaled / d_cols);
    remainder[i] = scaled % d_cols;
    assigned += plan.sub_k[i];
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  for (int idx = 0; assigned < k; idx = (idx + 1) % n) {
    const int i = order[idx];
    if (plan.sub_k[i] < plan.tiles[i].cols()) {
      ++plan.sub_k[i];
      ++assigned;
    }
  }
  return plan;
}

std::vector<MergedWinner> merge_selections(
    std::span<const TopKSelection> per_tile, const PartitionPlan& plan) {
  if (per_tile.size() != plan.tiles.size())
    throw std::invalid_argument("merge_selections: selection count != tile count");
  std::vector<MergedWinner> merged;
  merged.reserve(plan.total_k);
  for (std::size_t i = 0; i < per_tile.size(); ++i) {
    if (static_cast<int>(per_tile[i].winners.size()) != plan.sub_k[i])
      throw std::invalid_argument(
          "merge_selections: tile " + std::to_string(i) + " returned " +
          std::to_string(per_tile[i].winners.size()) + " winners, expected " +
          std::to_string(plan.sub_k[i]));
    for (const Winner& w : per_tile[i].winners) {
      merged.push_back(MergedWinner{w.column + plan.tiles[i].col_begin, w.code,
                                    w.cycle, static_cast<int>(i)});
    }
  }
  return merged;
}

}  // namespace topkima
