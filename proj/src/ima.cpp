#include "topkima/ima.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace topkima {

int mac_to_code(double v, std::pair<double, double> window, int n_b) {
  if (!(window.first < window.second))
    throw std::invalid_argument("mac_to_code: window min >= max");
  if (n_b < 1 || n_b > 20)
    throw std::invalid_argument("mac_to_code: n_b out of range");
  if (!std::isfinite(v)) throw std::invalid_argument("mac_to_code: non-finite value");
  const int max_code = (1 << n_b) - 1;
  const double clipped = std::clamp(v, window.first, window.second);
  const double scaled =
      (clipped - window.first) / (window.second - window.first) * max_code;
  return static_cast<int>(std::llround(scaled));
}

TopKSelection run_conversion(std::span<const int> codes, int k, int n_b,
                             std::string* trace) {
  const int d = static_cast<int>(codes.size());
  if (n_b < 1 || n_b > 20)
    throw std::invalid_argument("run_conversion: n_b out of range");
  if (k < 1 || k > d)
    throw std::invalid_argument("run_conversion: k must be in [1, #columns]");
  const int cycles = 1 << n_b;
  const int ramp_max = cycles - 1;

  // Bucket columns by firing cycle; ascending column order within a bucket
  // falls out of the scan order.
  std::vector<std::vector<int>> fired_at(cycles);
  for (int j = 0; j < d; ++j) {
    if (codes[j] < 0 || codes[j] > ramp_max)
      throw std::invalid_argument("run_conversion: code out of [0, 2^n_b - 1]");
    fired_at[ramp_max - codes[j]].push_back(j);
  }

  TopKSelection sel;
  sel.winners.reserve(k);
  int fired_total = 0;  // the counter watches requests, not grants
  for (int t = 0; t < cycles; ++t) {
    const auto& fired = fired_at[t];
    // Grants this cycle; surplus beyond k (ties in the stopping cycle) is
    // dropped from the higher addresses, which sit at the bucket's tail.
    const int want = k - static_cast<int>(sel.winners.size());
    const int grants = std::min<int>(want, static_cast<int>(fired.size()));
    for (int g = 0; g < grants; ++g)
      sel.winners.push_back(Winner{fired[g], ramp_max - t, t});
    fired_total += static_cast<int>(fired.size());

    if (trace) {
      *trace += "cycle=" + std::to_string(t) + " ramp=" + std::to_string(ramp_max - t) +
                " fired=[";
      for (std::size_t i = 0; i < fired.size(); ++i) {
        if (i) *trace += ",";
        *trace += std::to_string(fired[i]);
      }
      *trace += "] granted=" + std::to_string(grants) +
                " total=" + std::to_string(sel.winners.size()) + "\n";
    }

    if (fired_total >= k) {
      sel.stop_cycle = t + 1;
      break;
    }
  }
  sel.alpha = static_cast<double>(sel.stop_cycle) / cycles;
  if (trace)
    *trace += "stop_cycle=" + std::to_string(sel.stop_cycle) +
              " alpha=" + std::to_string(sel.alpha) + "\n";
  return sel;
}

double measure_alpha(std::span<const TopKSelection> selections) {
  if (selections.empty())
    throw std::invalid_argument("measure_alpha: empty selection list");
  double sum = 0.0;
  for (const auto& s : selections) sum += s.alpha;
  return sum / static_cast<double>(selections.size());
}

}  // namespace topkima
