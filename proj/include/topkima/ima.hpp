#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace topkima {

struct Winner {
  int column = 0;
  int code = 0;   // reconstructed from the firing cycle, not read from input
  int cycle = 0;  // cycle at which the ramp crossed this column
};

// Result of one decreasing-ramp conversion with top-k early stop.
// winners are ordered by (cycle ascending, column ascending), which makes the
// carried codes non-increasing. alpha = stop_cycle / 2^n_b is the executed
// fraction of the full ramp.
struct TopKSelection {
  std::vector<Winner> winners;
  int stop_cycle = 0;
  double alpha = 0.0;
};

// Affine map of a MAC value onto ADC codes 0 .. 2^n_b - 1. Values outside the
// window clip; rounding is nearest with halves away from zero.
int mac_to_code(double v, std::pair<double, double> window, int n_b);

// Simulates the ramp: at cycle t the ramp sits at 2^n_b - 1 - t, so column j
// fires at t_j = 2^n_b - 1 - codes[j]. Fired columns are granted in ascending
// address order within a cycle; the counter stops the conversion in the first
// cycle where total grants reach k, dropping surplus highest addresses of
// that final cycle on ties. Optional trace receives one line per executed
// cycle: "cycle=<t> ramp=<level> fired=[..] granted=<g> total=<n>".
TopKSelection run_conversion(std::span<const int> codes, int k, int n_b,
                             std::string* trace = nullptr);

double measure_alpha(std::span<const TopKSelection> selections);

}  // namespace topkima
