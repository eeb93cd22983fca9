// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Criterion 9 drives the real CLI binary, whose path is
// argv[1].

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "topkima/attention.hpp"
#include "topkima/costmodel.hpp"
#include "topkima/ima.hpp"
#include "topkima/partition.hpp"
#include "topkima/rng.hpp"
#include "topkima/softmax.hpp"
#include "topkima/tfcbp.hpp"
#include "topkima/xbar.hpp"

namespace fs = std::filesystem;
using namespace topkima;

namespace {

std::vector<int> sort_oracle(const std::vector<int>& codes, int k) {
  std::vector<int> idx(codes.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (codes[a] != codes[b]) return codes[a] > codes[b];
    return a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> winner_columns(const TopKSelection& sel) {
  std::vector<int> cols;
  for (const auto& w : sel.winners) cols.push_back(w.column);
  std::sort(cols.begin(), cols.end());
  return cols;
}

// --- criterion 1 -----------------------------------------------------------
bool latency_ratio_reproduction(std::string& detail) {
  const CostParams p = CostParams::macro_65nm();
  const CostReport r = cost_report(p);
  std::ostringstream ss;
  ss << "conv/topkima=" << r.latency_ratio_conv
     << " dtopk/topkima=" << r.latency_ratio_dtopk;
  detail = ss.str();
  return r.latency_ratio_conv >= 12.0 && r.latency_ratio_conv <= 18.0 &&
         r.latency_ratio_dtopk >= 6.0 && r.latency_ratio_dtopk <= 10.0;
}

// --- criterion 2 -----------------------------------------------------------
bool latency_ordering(std::string& detail) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int violations = 0;
  for (int r = 0; r < 10000; ++r) {
    CostParams p;
    p.d = 8 + static_cast<int>(gen() % 4000);
    p.k = 1 + static_cast<int>(gen() % (p.d - 1));  // k < d
    p.n_b = 3 + static_cast<int>(gen() % 6);
    p.t_clk_ima = 0.5 + 9.5 * uni(gen);
    p.t_ima = static_cast<double>(1 << p.n_b) * p.t_clk_ima;
    const double alpha_min = 1.0 / static_cast<double>(1 << p.n_b);
    p.alpha = alpha_min + (1.0 - alpha_min) * uni(gen);  // alpha <= 1
    const double arb_cap =
        std::min((1.0 - p.alpha) * p.t_ima, (p.t_ima - p.t_clk_ima) / p.k);
    p.t_arb = arb_cap * uni(gen);
    p.t_nl_dig = 0.5 + 19.5 * uni(gen);
    p.t_pwm_inp = 1.0 + 199.0 * uni(gen);
    p.t_wr = 1000.0 * uni(gen);
    p.t_clk_sort = uni(gen) * (p.d - p.k) * p.t_nl_dig / sort_cycles(p);
    p.validate();

    const double conv = latency_conv(p);
    const double dtopk = latency_dtopk(p);
    const double topkima = latency_topkima(p);
    if (!(topkima <= dtopk && dtopk <= conv)) ++violations;
  }
  detail = "violations=" + std::to_string(violations) + "/10000";
  return violations == 0;
}

// --- criteria 3 and 4 ------------------------------------------------------
struct ConversionStats {
  long long oracle_mismatches = 0;
  long long stop_cycle_mismatches = 0;
  long long cases = 0;
  double alpha_mean = 0.0;
};

ConversionStats conversion_stats;
bool conversion_stats_ready = false;

void run_conversion_battery() {
  if (conversion_stats_ready) return;
  ConversionStats s;

  // exhaustive: every code vector with d <= 6 at n_b = 2, every k
  for (int d = 1; d <= 6; ++d) {
    std::vector<int> codes(d);
    const long long total = 1LL << (2 * d);
    for (long long v = 0; v < total; ++v) {
      long long x = v;
      for (int i = 0; i < d; ++i) {
        codes[i] = static_cast<int>(x & 3);
        x >>= 2;
      }
      for (int k = 1; k <= d; ++k) {
        const auto sel = run_conversion(codes, k, 2);
        ++s.cases;
        if (winner_columns(sel) != sort_oracle(codes, k)) ++s.oracle_mismatches;
        std::vector<int> sorted = codes;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        if (sel.stop_cycle != 4 - sorted[k - 1]) ++s.stop_cycle_mismatches;
      }
    }
  }

  // randomized: 1e5 uniform cases at d = 384, n_b = 5, k = 5
  std::mt19937_64 gen(103);
  std::uniform_int_distribution<int> dist(0, 31);
  double alpha_sum = 0.0;
  const int n_random = 100000;
  std::vector<int> codes(384);
  for (int r = 0; r < n_random; ++r) {
    for (int& c : codes) c = dist(gen);
    const auto sel = run_conversion(codes, 5, 5);
    ++s.cases;
    alpha_sum += sel.alpha;
    if (winner_columns(sel) != sort_oracle(codes, 5)) ++s.oracle_mismatches;
    std::vector<int> sorted = codes;
    std::nth_element(sorted.begin(), sorted.begin() + 4, sorted.end(),
                     std::greater<>());
    if (sel.stop_cycle != 32 - sorted[4]) ++s.stop_cycle_mismatches;
  }
  s.alpha_mean = alpha_sum / n_random;
  conversion_stats = s;
  conversion_stats_ready = true;
}

bool topk_oracle_equivalence(std::string& detail) {
  run_conversion_battery();
  detail = "cases=" + std::to_string(conversion_stats.cases) +
           " mismatches=" + std::to_string(conversion_stats.oracle_mismatches);
  return conversion_stats.oracle_mismatches == 0;
}

bool early_stop_arithmetic(std::string& detail) {
  run_conversion_battery();
  std::ostringstream ss;
  ss << "stop-cycle mismatches=" << conversion_stats.stop_cycle_mismatches
     << " mean alpha=" << conversion_stats.alpha_mean;
  detail = ss.str();
  return conversion_stats.stop_cycle_mismatches == 0 &&
         conversion_stats.alpha_mean < 0.2;
}

// --- criterion 5 -----------------------------------------------------------
bool sub_topk_example(std::string& detail) {
  QuantConfig qcfg;

  const auto plan128 = plan_partition(384, 64, qcfg, {128, 128}, 64, 5);
  bool ok = plan128.tiles.size() == 3 && plan128.sub_k == std::vector<int>{2, 2, 1};
  for (const auto& t : plan128.tiles) ok = ok && t.weight_limit == 1;

  std::vector<TopKSelection> sels;
  for (std::size_t t = 0; t < plan128.tiles.size(); ++t) {
    std::vector<int> codes(plan128.tiles[t].cols());
    for (int j = 0; j < plan128.tiles[t].cols(); ++j)
      codes[j] = plan128.tiles[t].col_begin + j + 1;  // values 1..384
    sels.push_back(run_conversion(codes, plan128.sub_k[t], 9));
  }
  std::set<int> values;
  for (const auto& mw : merge_selections(sels, plan128)) values.insert(mw.code);
  ok = ok && values == std::set<int>{127, 128, 255, 256, 384};

  const auto plan256 = plan_partition(384, 64, qcfg, {256, 256}, 64, 5);
  ok = ok && plan256.tiles.size() == 2 && plan256.sub_k == std::vector<int>{3, 2};

  std::ostringstream ss;
  ss << "merged values = {";
  for (int v : values) ss << v << " ";
  ss << "}, 256-col split k=[" << plan256.sub_k[0] << "," << plan256.sub_k[1] << "]";
  detail = ss.str();
  return ok;
}

// --- criterion 6 -----------------------------------------------------------
bool scale_free_identity(std::string& detail) {
  std::mt19937_64 gen(107);
  double worst = 0.0;
  int argmax_mismatches = 0;
  for (int r = 0; r < 1000; ++r) {
    const int sl = 2 + static_cast<int>(gen() % 15);
    const int dm = 2 + static_cast<int>(gen() % 23);
    const int dk = 1 + static_cast<int>(gen() % 64);
    const Matrix x = random_gaussian(sl, dm, gen());
    const Matrix w_q = random_gaussian(dm, dk, gen());
    const Matrix key = random_gaussian(sl, dk, gen());

    const Matrix folded = matmul_bt(matmul(x, fold_scale(w_q, dk)), key);
    const Matrix raw = matmul_bt(matmul(x, w_q), key);
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));

    for (int i = 0; i < sl; ++i) {
      std::vector<double> a(sl), b(sl);
      for (int j = 0; j < sl; ++j) {
        a[j] = folded(i, j);
        b[j] = raw(i, j) * inv;
      }
      const auto pa = softmax_full(a);
      const auto pb = softmax_full(b);
      int ia = 0, ib = 0;
      for (int j = 0; j < sl; ++j) {
        worst = std::max(worst, std::abs(pa[j] - pb[j]));
        if (a[j] > a[ia]) ia = j;
        if (b[j] > b[ib]) ib = j;
      }
      if (ia != ib) ++argmax_mismatches;
    }
  }
  std::ostringstream ss;
  ss << "max |diff|=" << worst << " argmax mismatches=" << argmax_mismatches;
  detail = ss.str();
  return worst <= 1e-6 && argmax_mismatches == 0;
}

// --- criterion 7 -----------------------------------------------------------
bool tfcbp_gradient_check(std::string& detail) {
  std::mt19937_64 gen(109);
  std::normal_distribution<double> dist(0.0, 1.0);
  double worst = 0.0;
  bool bitwise_ok = true;
  for (int d : {3, 64, 384}) {
    for (int r = 0; r < 100; ++r) {
      std::vector<double> logits(d), upstream(d);
      for (double& v : logits) v = dist(gen);
      for (double& v : upstream) v = dist(gen);

      TfcbpLayer layer(d, std::min(5, d));
      layer.forward(logits);
      const auto grad = layer.backward(upstream);

      // central finite differences of <softmax_full(x), upstream>
      const double eps = 1e-5;
      double mag = 0.0, diff = 0.0;
      for (int i = 0; i < d; ++i) {
        std::vector<double> plus = logits, minus = logits;
        plus[i] += eps;
        minus[i] -= eps;
        const auto pp = softmax_full(plus);
        const auto pm = softmax_full(minus);
        double fp = 0.0, fm = 0.0;
        for (int j = 0; j < d; ++j) {
          fp += pp[j] * upstream[j];
          fm += pm[j] * upstream[j];
        }
        const double fd = (fp - fm) / (2 * eps);
        diff = std::max(diff, std::abs(fd - grad[i]));
        mag = std::max(mag, std::abs(grad[i]));
      }
      worst = std::max(worst, diff / std::max(mag, 1e-12));

      // backward must be bit-identical across k
      for (int k : {1, 5, d}) {
        TfcbpLayer other(d, std::min(k, d));
        other.forward(logits);
        if (other.backward(upstream) != grad) bitwise_ok = false;
      }
    }
  }
  std::ostringstream ss;
  ss << "worst rel err=" << worst << " k-invariance=" << (bitwise_ok ? "yes" : "NO");
  detail = ss.str();
  return worst <= 1e-5 && bitwise_ok;
}

// --- criterion 8 -----------------------------------------------------------
bool crossbar_trend(std::string& detail) {
  AttentionConfig cfg = AttentionConfig::bert_base();
  cfg.seed = 2025;
  const Matrix x = random_gaussian(cfg.seq_len, cfg.d_model, mix64(cfg.seed, 10));
  const AttentionWeights w = AttentionWeights::random(cfg, cfg.seed);

  const auto rows = attention_error_report(x, w, cfg, std::vector<int>{128, 256});
  const double overlap128 = rows[0].mean_overlap;
  const double overlap256 = rows[1].mean_overlap;
  const bool strictly_worse =
      overlap128 < overlap256 && rows[0].output_mse > rows[1].output_mse;

  // one array large enough for the whole head reproduces the global top-k
  AttentionConfig single = cfg;
  single.crossbar_rows = cfg.d_k * cfg.quant.cells_per_weight + cfg.replica_rows;
  single.crossbar_cols = cfg.seq_len;
  single.mode = AttentionMode::quantized_topkima;
  const auto sres = attention_forward(x, w, single);
  bool single_exact = true;
  for (int o : sres.diag.row_overlap) single_exact = single_exact && o == cfg.k;

  std::ostringstream ss;
  ss << "overlap 128=" << overlap128 << " 256=" << overlap256
     << " single-tile=" << sres.diag.mean_overlap << "/" << cfg.k
     << " rows=" << sres.diag.row_overlap.size();
  detail = ss.str();
  return overlap256 >= overlap128 && strictly_worse && single_exact &&
         sres.diag.row_overlap.size() >= 100;
}

// --- criterion 9 -----------------------------------------------------------
int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) {
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      out[fs::relative(entry.path(), dir).string()] = ss.str();
    }
  return out;
}

bool cli_determinism(const std::string& cli, std::string& detail) {
  if (cli.empty()) {
    detail = "no CLI path given";
    return false;
  }
  const fs::path work = fs::path("acceptance_out") / "cli";
  fs::remove_all(work);
  fs::create_directories(work);

  const auto write_cfg = [&](const std::string& name, const std::string& text) {
    std::ofstream out(work / name, std::ios::binary);
    out << text;
    return (work / name).string();
  };
  struct Case {
    std::string name;
    std::string args;
  };
  std::vector<Case> cases;
  cases.push_back({"simulate-macro", "simulate-macro --preset demo3 --trace"});
  cases.push_back({"cost-report", "cost-report --preset macro65nm --config " +
                                      write_cfg("cost.json",
                                                R"({"cost_report": {"sl_sweep": [256, 1024, 4096]}})")});
  cases.push_back({"attention-demo",
                   "attention-demo --preset small --seed 7 --config " +
                       write_cfg("attn.json",
                                 R"({"attention_demo": {"modes": ["float_reference",
                                     "quantized_topkima", "quantized_dtopk"]}})")});
  cases.push_back({"tfcbp-train", "tfcbp-train --seed 3 --config " +
                                      write_cfg("train.json",
                                                R"({"tfcbp_train": {"epochs": 5,
                                                    "train_samples": 64, "test_samples": 64}})")});
  cases.push_back({"sweep", "sweep --seed 11 --config " +
                                write_cfg("sweep.json",
                                          R"({"sweep": {"grid": {"k": [1, 3], "crossbar": [32]},
                                              "base": {"seq_len": 24, "d_model": 32, "d_k": 16,
                                                       "d_v": 16, "replica_rows": 8}}})")});

  for (const auto& c : cases) {
    const fs::path out1 = work / (c.name + "_1");
    const fs::path out2 = work / (c.name + "_2");
    const std::string base = "\"" + cli + "\" " + c.args;
    const int rc1 = run_command(base + " --out " + out1.string() +
                                " > /dev/null 2>&1");
    const int rc2 = run_command(base + " --out " + out2.string() +
                                " > /dev/null 2>&1");
    if (rc1 != 0 || rc2 != 0) {
      detail = c.name + " exited with " + std::to_string(rc1) + "/" +
               std::to_string(rc2);
      return false;
    }
    if (dir_contents(out1) != dir_contents(out2)) {
      detail = c.name + " produced differing outputs";
      return false;
    }
  }
  detail = std::to_string(cases.size()) + " commands byte-identical";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;

  const auto check = [&](int num, const std::string& name,
                         const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << num << " (" << name
              << "): " << detail << "\n";
  };

  check(1, "latency-ratio reproduction", latency_ratio_reproduction);
  check(2, "macro latency ordering", latency_ordering);
  check(3, "top-k oracle equivalence", topk_oracle_equivalence);
  check(4, "early-stop arithmetic", early_stop_arithmetic);
  check(5, "sub-top-k worked example", sub_topk_example);
  check(6, "scale-free identity", scale_free_identity);
  check(7, "TFCBP gradient check", tfcbp_gradient_check);
  check(8, "crossbar-size trend", crossbar_trend);
  check(9, "CLI determinism",
        [&](std::string& d) { return cli_determinism(cli, d); });

  if (failures == 0)
    std::cout << "all criteria passed\n";
  else
    std::cout << failures << " criteria failed\n";
  return failures;
}
