#include "topkima/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topkima {

void QuantConfig::validate() const {
  if (activation_bits < 1) throw std::invalid_argument("activation_bits must be >= 1");
  if (adc_bits < 1) throw std::invalid_argument("adc_bits must be >= 1");
  if (!(activation_window.first < activation_window.second))
    throw std::invalid_argument("activation_window must satisfy min < max");
  if (cells_per_weight < 1) throw std::invalid_argument("cells_per_weight must be >= 1");
  if (static_cast<int>(cell_scales.size()) != cells_per_weight)
    throw std::invalid_argument("cell_scales size must equal cells_per_weight");
  for (int s : cell_scales)
    if (s < 1) throw std::invalid_argument("cell_scales must be positive");
  if (weight_levels != 2 * max_weight() + 1)
    throw std::invalid_argument(
        "weight_levels must equal 2*sum(cell_scales)+1, got " +
        std::to_string(weight_levels));
}

int QuantConfig::max_weight() const {
  return std::accumulate(cell_scales.begin(), cell_scales.end(), 0);
}

int QuantConfig::activation_levels() const {
  return (1 << activation_bits) - 1;
}

double QuantConfig::activation_step() const {
  return quantizer_step(activation_window, activation_levels());
}

double quantizer_step(std::pair<double, double> window, int levels) {
  return (window.second - window.first) / static_cast<double>(levels - 1);
}

int quantize_symmetric(double x, std::pair<double, double> window,
                       int levels) {
  if (!(window.first < window.second))
    throw std::invalid_argument("quantize_symmetric: window min >= max");
  if (levels < 3 || levels % 2 == 0)
    throw std::invalid_argument("quantize_symmetric: levels must be odd and >= 3");
  if (!std::isfinite(x))
    throw std::invalid_argument("quantize_symmetric: non-finite input");
  const double center = 0.5 * (window.first + window.second);
  const double step = quantizer_step(window, levels);
  const double v = std::clamp(x, window.first, window.second);
  // std::llround rounds halfway cases away from zero
  return static_cast<int>(std::llround((v - center) / step));
}

double dequantize_symmetric(int code, std::pair<double, double> window,
                            int levels) {
  const double center = 0.5 * (window.first + window.second);
  return center + code * quantizer_step(window, levels);
}

std::vector<int> quantize_uniform(std::span<const double> x,
                                  const QuantConfig& cfg) {
  cfg.validate();
  const int levels = cfg.activation_levels();
  std::vector<int> codes(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]))
      throw std::invalid_argument("quantize_uniform: non-finite input at index " +
                                  std::to_string(i));
    codes[i] = quantize_symmetric(x[i], cfg.activation_window, levels);
  }
  return codes;
}

// Canonical encoding: walk the scales from largest to smallest, at each cell
// pick the digit in {-1,0,+1} that minimizes the remaining magnitude, ties
// resolved toward 0. For scales 1,2,4 this round-trips every w in [-7,7].
TernaryWeight encode_ternary_weight(int w, const QuantConfig& cfg) {
  cfg.validate();
  const int limit = cfg.max_weight();
  if (std::abs(w) > limit)
    throw std::invalid_argument("encode_ternary_weight: |w| exceeds " +
                                std::to_string(limit));

  std::vector<std::size_t> order(cfg.cell_scales.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cfg.cell_scales[a] > cfg.cell_scales[b];
  });

  TernaryWeight t;
  t.digits.assign(cfg.cell_scales.size(), 0);
  int remainder = w;
  for (std::size_t idx : order) {
    const int scale = cfg.cell_scales[idx];
    int best = 0;
    int best_err = std::abs(remainder);
    for (int d : {-1, +1}) {
      const int err = std::abs(remainder - d * scale);
      if (err < best_err) {
        best = d;
        best_err = err;
      }
    }
    t.digits[idx] = best;
    remainder -= best * scale;
  }
  return t;
}

int decode_ternary_weight(const TernaryWeight& t, const QuantConfig& cfg) {
  cfg.validate();
  if (t.digits.size() != cfg.cell_scales.size())
    throw std::invalid_argument("decode_ternary_weight: digit count mismatch");
  int value = 0;
  for (std::size_t i = 0; i < t.digits.size(); ++i) {
    if (t.digits[i] < -1 || t.digits[i] > 1)
      throw std::invalid_argument("decode_ternary_weight: digit outside {-1,0,+1}");
    value += t.digits[i] * cfg.cell_scales[i];
  }
  return value;
}

}  // namespace topkima
