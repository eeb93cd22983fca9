#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "topkima/matrix.hpp"
#include "topkima/quant.hpp"

namespace topkima {

enum class AttentionMode { float_reference, quantized_topkima, quantized_dtopk };

struct AttentionConfig {
  int d_model = 768;
  int d_k = 64;
  int d_v = 64;
  int seq_len = 384;
  int heads = 12;
  int k = 5;
  QuantConfig quant;
  int crossbar_rows = 256;
  int crossbar_cols = 256;
  int replica_rows = 64;
  double noise_sigma = 0.0;
  AttentionMode mode = AttentionMode::quantized_topkima;
  std::uint64_t seed = 1;
  // Ablation switch: keep the top-k data flow but feed exact scores through
  // it (no activation/weight/ADC quantization, selection by sort).
  bool bypass_quantization = false;

  void validate() const;

  static AttentionConfig bert_base();  // 768/64/64, SL=384, 12 heads, k=5
  static AttentionConfig demo_small();
};

// Projection weights; each matrix is d_model x (heads * d_k|d_v) with heads
// laid out side by side.
struct AttentionWeights {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;

  static AttentionWeights random(const AttentionConfig& cfg, std::uint64_t seed);
};

// Folds the 1/sqrt(d_k) score scaling into the query projection so the
// scores need no runtime division.
Matrix fold_scale(const Matrix& w_q, int d_k);

struct AttentionDiagnostics {
  double output_mse = 0.0;     // vs the float reference output
  double mean_overlap = 0.0;   // winners shared with the global top-k, per row
  double mean_alpha = 0.0;     // executed ramp fraction, per row (max over tiles)
  std::vector<int> row_overlap;
  std::vector<double> row_alpha;
};

struct AttentionResult {
  Matrix output;  // seq_len x (heads * d_v)
  AttentionDiagnostics diag;
};

AttentionResult attention_forward(const Matrix& x, const AttentionWeights& w,
                                  const AttentionConfig& cfg);

struct CrossbarTrendRow {
  int crossbar = 0;
  double mean_overlap = 0.0;
  double output_mse = 0.0;
  double mean_alpha = 0.0;
};

// Re-runs the same input at several (square) crossbar sizes and tabulates
// winner overlap and output error per size.
std::vector<CrossbarTrendRow> attention_error_report(
    const Matrix& x, const AttentionWeights& w, const AttentionConfig& base,
    std::span<const int> crossbar_sizes);

}  // namespace topkima
