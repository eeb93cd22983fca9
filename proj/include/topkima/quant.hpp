#pragma once

#include <span>
#include <utility>
#include <vector>

namespace topkima {

// Bit widths and value windows shared by the quantized datapath.
// weight_levels must match the ternary cell group: each weight is stored in
// cells_per_weight ternary cells whose input pulses are scaled by cell_scales,
// so 2 * sum(cell_scales) + 1 distinct values are representable.
struct QuantConfig {
  int activation_bits = 5;
  int weight_levels = 15;  // -7..+7 with the default scales
  int adc_bits = 5;
  std::pair<double, double> activation_window{-1.0, 1.0};
  int cells_per_weight = 3;
  std::vector<int> cell_scales{1, 2, 4};

  void validate() const;            // throws std::invalid_argument
  int max_weight() const;           // sum of cell_scales
  int activation_levels() const;    // 2^activation_bits - 1
  double activation_step() const;
};

// One weight spread across ternary cells; digits[i] pairs with cell_scales[i].
struct TernaryWeight {
  std::vector<int> digits;
};

// Symmetric uniform quantizer over `window` with an odd number of levels.
// Clips at the window edges, rounds half away from zero.
int quantize_symmetric(double x, std::pair<double, double> window, int levels);
double dequantize_symmetric(int code, std::pair<double, double> window,
                            int levels);
double quantizer_step(std::pair<double, double> window, int levels);

std::vector<int> quantize_uniform(std::span<const double> x,
                                  const QuantConfig& cfg);

TernaryWeight encode_ternary_weight(int w, const QuantConfig& cfg);
int decode_ternary_weight(const TernaryWeight& t, const QuantConfig& cfg);

}  // namespace topkima
