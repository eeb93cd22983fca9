#pragma once

#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "topkima/ima.hpp"
#include "topkima/quant.hpp"

namespace topkima {

// One tile's slice of the key columns plus the weight precision the physical
// row budget allows (whole cells only).
struct TileSpec {
  int col_begin = 0;
  int col_end = 0;  // exclusive
  int cells_per_weight = 0;
  int weight_limit = 0;  // max |w| representable with those cells

  int cols() const { return col_end - col_begin; }
};

struct PartitionPlan {
  std::vector<TileSpec> tiles;
  std::vector<int> sub_k;
  int total_k = 0;

  nlohmann::json to_json() const;
};

// Splits d_cols key columns across physically bounded crossbars and allocates
// the top-k budget proportionally to tile widths (largest remainder, ties to
// the lower tile index). Weight precision per tile is
// floor((physical_rows - replica_rows) / d_rows) cells, capped at the
// configured cells_per_weight.
PartitionPlan plan_partition(int d_cols, int d_rows, const QuantConfig& cfg,
                             std::pair<int, int> physical, int replica_rows,
                             int k);

// A winner re-indexed from tile-local to global column position.
struct MergedWinner {
  int column = 0;  // global
  int code = 0;
  int cycle = 0;
  int tile = 0;
};

// Concatenates per-tile selections in tile order; each tile must contribute
// exactly its sub_k winners.
std::vector<MergedWinner> merge_selections(
    std::span<const TopKSelection> per_tile, const PartitionPlan& plan);

}  // namespace topkima
