#include "topkima/tfcbp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "topkima/rng.hpp"
#include "topkima/softmax.hpp"

namespace topkima {

std::vector<double> tfcbp_forward(std::span<const double> logits, int k) {
  const int d = static_cast<int>(logits.size());
  if (d == 0) throw std::invalid_argument("tfcbp_forward: empty logits");
  if (k < 1 || k > d)
    throw std::invalid_argument("tfcbp_forward: k must be in [1, d]");
  for (double v : logits)
    if (!std::isfinite(v))
      throw std::invalid_argument("tfcbp_forward: non-finite logit");

  auto selected = topk_indices(logits, k);
  // Accumulate in ascending index order so k == d matches softmax_full
  // bit for bit.
  std::sort(selected.begin(), selected.end());
  double m = logits[selected[0]];
  for (int i : selected) m = std::max(m, logits[i]);
  std::vector<double> out(d, 0.0);
  double sum = 0.0;
  for (int i : selected) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (int i : selected) out[i] /= sum;
  return out;
}

std::vector<double> softmax_jvp(std::span<const double> probs,
                                std::span<const double> upstream) {
  if (probs.size() != upstream.size())
    throw std::invalid_argument("softmax_jvp: size mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * upstream[i];
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    out[i] = probs[i] * (upstream[i] - dot);
  return out;
}

TfcbpLayer::TfcbpLayer(int d, int k, TfcbpBackward backward)
    : d_(d), k_(k), backward_(backward) {
  if (d_ < 1) throw std::invalid_argument("TfcbpLayer: d must be >= 1");
  if (k_ < 1 || k_ > d_)
    throw std::invalid_argument("TfcbpLayer: k must be in [1, d]");
}

std::vector<double> TfcbpLayer::forward(std::span<const double> logits) {
  if (static_cast<int>(logits.size()) != d_)
    throw std::invalid_argument("TfcbpLayer::forward: logits size != d");
  cached_logits_.emplace(logits.begin(), logits.end());
  return tfcbp_forward(logits, k_);
}

std::vector<double> TfcbpLayer::backward(std::span<const double> upstream) const {
  if (!cached_logits_)
    throw std::logic_error("TfcbpLayer::backward: no cached forward");
  if (static_cast<int>(upstream.size()) != d_)
    throw std::invalid_argument("TfcbpLayer::backward: upstream size != d");
  const std::vector<double> probs =
      backward_ == TfcbpBackward::full ? softmax_full(*cached_logits_)
                                       : tfcbp_forward(*cached_logits_, k_);
  return softmax_jvp(probs, upstream);
}

void ToyTaskConfig::validate() const {
  if (seq_len < 1 || seq_len > 64)
    throw std::invalid_argument("ToyTaskConfig: seq_len must be in [1, 64]");
  if (num_classes < 2) throw std::invalid_argument("ToyTaskConfig: num_classes < 2");
  if (k < 1 || k > seq_len)
    throw std::invalid_argument("ToyTaskConfig: k must be in [1, seq_len]");
  if (train_samples < 1 || test_samples < 1)
    throw std::invalid_argument("ToyTaskConfig: sample counts must be positive");
  if (epochs < 1) throw std::invalid_argument("ToyTaskConfig: epochs must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("ToyTaskConfig: lr must be > 0");
  if (!(score_window > 0.0))
    throw std::invalid_argument("ToyTaskConfig: score_window must be > 0");
  if (score_bits < 2 || score_bits > 16)
    throw std::invalid_argument("ToyTaskConfig: score_bits out of range");
}

namespace {

struct ToySample {
  std::vector<double> features;  // seq_len * feat dims, row-major
  int label = 0;
};

// feature layout per token: [class one-hot (C) | salience | spare]
// Only the hidden target token carries class and salience information; the
// distractors are pure jitter. A masked backward therefore sees almost no
// gradient until the target happens to fall inside the surviving top-k,
// which is exactly the failure mode the complete backward avoids.
std::vector<ToySample> make_samples(const ToyTaskConfig& cfg, int count,
                                    std::uint64_t seed) {
  const int C = cfg.num_classes;
  const int feat = C + 2;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> cls(0, C - 1);
  std::uniform_int_distribution<int> pos(0, cfg.seq_len - 1);
  std::normal_distribution<double> jitter(0.0, 0.1);

  std::vector<ToySample> samples(count);
  for (auto& s : samples) {
    s.label = cls(gen);
    const int target = pos(gen);
    s.features.assign(static_cast<std::size_t>(cfg.seq_len) * feat, 0.0);
    for (int t = 0; t < cfg.seq_len; ++t) {
      double* x = s.features.data() + static_cast<std::size_t>(t) * feat;
      for (int j = 0; j < feat; ++j) x[j] = jitter(gen);
      if (t == target) {
        x[s.label] += 1.0;
        x[C] += 1.0;  // salience channel marks the answer
      }
    }
  }
  return samples;
}

std::vector<double> attn_forward(std::span<const double> scores, int k,
                                 TrainVariant variant) {
  if (variant == TrainVariant::full)
    return softmax_full(scores);
  return tfcbp_forward(scores, k);
}

std::vector<double> attn_backward(std::span<const double> scores,
                                  std::span<const double> probs,
                                  std::span<const double> upstream,
                                  TrainVariant variant) {
  switch (variant) {
    case TrainVariant::full:
      return softmax_jvp(probs, upstream);
    case TrainVariant::naive_topk:
      // gradient confined to the surviving top-k support
      return softmax_jvp(probs, upstream);
    case TrainVariant::tfcbp:
      return softmax_jvp(softmax_full(scores), upstream);
  }
  throw std::logic_error("attn_backward: unknown variant");
}

}  // namespace

std::vector<EpochStat> toy_train(const ToyTaskConfig& cfg,
                                 TrainVariant variant) {
  cfg.validate();
  const int C = cfg.num_classes;
  const int feat = C + 2;
  const int L = cfg.seq_len;

  const auto train = make_samples(cfg, cfg.train_samples, mix64(cfg.seed, 0xda7a));
  const auto test = make_samples(cfg, cfg.test_samples, mix64(cfg.seed, 0x7e57));

  // Parameters: attention query q, classifier W (C x feat) and bias b.
  std::vector<double> q(feat, 0.0);
  std::vector<double> W(static_cast<std::size_t>(C) * feat);
  std::vector<double> b(C, 0.0);
  {
    std::mt19937_64 gen(mix64(cfg.seed, 0x1417));
    std::normal_distribution<double> init(0.0, 0.1);
    for (double& w : W) w = init(gen);
  }

  const std::pair<double, double> score_win{-cfg.score_window, cfg.score_window};
  const int score_levels = (1 << cfg.score_bits) - 1;

  auto run_sample = [&](const ToySample& s, bool learn, double* loss_out,
                        std::vector<double>& dq, std::vector<double>& dW,
                        std::vector<double>& db) -> int {
    // forward
    std::vector<double> scores(L);
    for (int t = 0; t < L; ++t) {
      const double* x = s.features.data() + static_cast<std::size_t>(t) * feat;
      double acc = 0.0;
      for (int j = 0; j < feat; ++j) acc += q[j] * x[j];
      scores[t] = acc;
    }
    std::vector<double> scores_q = scores;
    if (cfg.qat) {
      // fake-quantize; backward passes straight through
      for (double& v : scores_q)
        v = dequantize_symmetric(quantize_symmetric(v, score_win, score_levels),
                                 score_win, score_levels);
    }
    const auto A = attn_forward(scores_q, cfg.k, variant);
    std::vector<double> pooled(feat, 0.0);
    for (int t = 0; t < L; ++t) {
      if (A[t] == 0.0) continue;
      const double* x = s.features.data() + static_cast<std::size_t>(t) * feat;
      for (int j = 0; j < feat; ++j) pooled[j] += A[t] * x[j];
    }
    std::vector<double> logits(C);
    for (int c = 0; c < C; ++c) {
      double acc = b[c];
      const double* wrow = W.data() + static_cast<std::size_t>(c) * feat;
      for (int j = 0; j < feat; ++j) acc += wrow[j] * pooled[j];
      logits[c] = acc;
    }
    const auto p = softmax_full(logits);
    // no clamping: a diverged run must surface as a non-finite loss
    if (loss_out) *loss_out = -std::log(p[s.label]);

    int pred = 0;
    for (int c = 1; c < C; ++c)
      if (logits[c] > logits[pred]) pred = c;
    if (!learn) return pred;

    // backward
    std::vector<double> dlogits(p.begin(), p.end());
    dlogits[s.label] -= 1.0;
    for (int c = 0; c < C; ++c) {
      db[c] += dlogits[c];
      double* dwrow = dW.data() + static_cast<std::size_t>(c) * feat;
      for (int j = 0; j < feat; ++j) dwrow[j] += dlogits[c] * pooled[j];
    }
    std::vector<double> dpooled(feat, 0.0);
    for (int c = 0; c < C; ++c) {
      const double* wrow = W.data() + static_cast<std::size_t>(c) * feat;
      for (int j = 0; j < feat; ++j) dpooled[j] += wrow[j] * dlogits[c];
    }
    std::vector<double> dA(L);
    for (int t = 0; t < L; ++t) {
      const double* x = s.features.data() + static_cast<std::size_t>(t) * feat;
      double acc = 0.0;
      for (int j = 0; j < feat; ++j) acc += dpooled[j] * x[j];
      dA[t] = acc;
    }
    const auto dscores = attn_backward(scores_q, A, dA, variant);
    for (int t = 0; t < L; ++t) {
      if (dscores[t] == 0.0) continue;
      const double* x = s.features.data() + static_cast<std::size_t>(t) * feat;
      for (int j = 0; j < feat; ++j) dq[j] += dscores[t] * x[j];
    }
    return pred;
  };

  std::vector<EpochStat> trace;
  trace.reserve(cfg.epochs);
  std::vector<double> dq(feat), dW(W.size()), db(C);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dW.begin(), dW.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    double loss_sum = 0.0;
    for (const auto& s : train) {
      double loss = 0.0;
      run_sample(s, true, &loss, dq, dW, db);
      loss_sum += loss;
    }
    const double mean_loss = loss_sum / cfg.train_samples;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("toy_train: training diverged at epoch " +
                               std::to_string(epoch) + " (non-finite loss)");
    const double scale = cfg.lr / cfg.train_samples;
    for (int j = 0; j < feat; ++j) q[j] -= scale * dq[j];
    for (std::size_t i = 0; i < W.size(); ++i) W[i] -= scale * dW[i];
    for (int c = 0; c < C; ++c) b[c] -= scale * db[c];

    int correct = 0;
    for (const auto& s : test)
      if (run_sample(s, false, nullptr, dq, dW, db) == s.label) ++correct;
    trace.push_back(EpochStat{epoch, static_cast<double>(correct) / cfg.test_samples,
                              mean_loss});
  }
  return trace;
}

}  // namespace topkima
