#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "topkima/quant.hpp"

namespace topkima {

// Dense masked softmax: probabilities over the k largest logits (ties toward
// the smaller index), zeros elsewhere. k == d reproduces softmax_full exactly,
// bit for bit.
std::vector<double> tfcbp_forward(std::span<const double> logits, int k);

// Jacobian-vector product of the softmax at `probs`:
// out_i = p_i * (g_i - sum_j p_j * g_j).
std::vector<double> softmax_jvp(std::span<const double> probs,
                                std::span<const double> upstream);

// Which probabilities feed the backward Jacobian: the full softmax (all d
// activations participate) or the masked forward output.
enum class TfcbpBackward { full, masked };

// Top-k forward / complete backward softmax layer. The forward masks to the
// k largest logits; the backward, by default, is the full-softmax JVP and is
// therefore independent of k.
class TfcbpLayer {
 public:
  TfcbpLayer(int d, int k, TfcbpBackward backward = TfcbpBackward::full);

  std::vector<double> forward(std::span<const double> logits);
  std::vector<double> backward(std::span<const double> upstream) const;

  int d() const { return d_; }
  int k() const { return k_; }

 private:
  int d_;
  int k_;
  TfcbpBackward backward_;
  std::optional<std::vector<double>> cached_logits_;
};

enum class TrainVariant { tfcbp, naive_topk, full };

// A toy sequence task: each sample hides one salient token carrying the class
// label among distractors; a single-query attention layer must learn to find
// it. Small enough for closed-loop tests, hard enough that the backward rule
// matters.
struct ToyTaskConfig {
  int seq_len = 32;
  int num_classes = 4;
  int k = 5;
  int train_samples = 256;
  int test_samples = 256;
  int epochs = 40;
  double lr = 5.0;
  std::uint64_t seed = 1;
  bool qat = false;              // fake-quantize attention scores on forward
  double score_window = 4.0;     // QAT quantization range (+/-)
  int score_bits = 5;

  void validate() const;
};

struct EpochStat {
  int epoch = 0;
  double accuracy = 0.0;  // held-out
  double loss = 0.0;      // mean training loss
};

// Trains the one-layer attention classifier with plain gradient descent and
// returns per-epoch accuracy/loss. Deterministic given the seed; a non-finite
// loss aborts with a diagnostic rather than being clipped.
std::vector<EpochStat> toy_train(const ToyTaskConfig& cfg,
                                 TrainVariant variant);

}  // namespace topkima
