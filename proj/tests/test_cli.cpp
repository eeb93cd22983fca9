#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "topkima/cli.hpp"

using namespace topkima;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_test_out") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  return out;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "topkima_sim");
  return run_cli(args);
}

}  // namespace

TEST_CASE("simulate-macro demo preset and determinism") {
  const fs::path a = fresh_dir("sim_a");
  const fs::path b = fresh_dir("sim_b");
  CHECK(run({"simulate-macro", "--preset", "demo3", "--trace", "--out",
             a.string()}) == kExitOk);
  CHECK(run({"simulate-macro", "--preset", "demo3", "--trace", "--out",
             b.string()}) == kExitOk);
  CHECK(dir_contents(a) == dir_contents(b));

  const json report = json::parse(slurp(a / "report.json"));
  CHECK(report["selections"][0]["winners"][0]["column"] == 2);
  CHECK(report["selections"][0]["stop_cycle"] == 12);
  CHECK(slurp(a / "trace.txt").find("cycle=11") != std::string::npos);

  // the effective config reproduces the run without the preset flag
  const fs::path c = fresh_dir("sim_echo");
  CHECK(run({"simulate-macro", "--config",
             (a / "effective_config.json").string(), "--out", c.string()}) ==
        kExitOk);
  CHECK(dir_contents(a) == dir_contents(c));
}

TEST_CASE("simulate-macro config errors get the config exit code") {
  const fs::path dir = fresh_dir("sim_err");
  const fs::path cfg = dir / "cfg.json";

  // k exceeds the column count: precondition, not a runtime failure
  write_text(cfg, R"({"simulate_macro": {"codes": [5, 12, 20], "k": 9}})");
  CHECK(run({"simulate-macro", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitConfigError);

  write_text(cfg, R"({"simulate_macro": {"codez": [1]}})");
  CHECK(run({"simulate-macro", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitConfigError);

  write_text(cfg, R"({"simulate_macro": )");
  CHECK(run({"simulate-macro", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitConfigError);

  CHECK(run({"simulate-macro", "--config", "does_not_exist.json", "--out",
             (dir / "o").string()}) == kExitConfigError);
}

TEST_CASE("cost-report emits the design point and rejects bad params") {
  const fs::path dir = fresh_dir("cost");
  CHECK(run({"cost-report", "--preset", "macro65nm", "--out",
             dir.string()}) == kExitOk);
  const json report = json::parse(slurp(dir / "report.json"));
  const double conv_ratio = report["latency_ratio"]["conv_over_topkima"];
  const double dtopk_ratio = report["latency_ratio"]["dtopk_over_topkima"];
  CHECK(conv_ratio > 12.0);
  CHECK(conv_ratio < 18.0);
  CHECK(dtopk_ratio > 6.0);
  CHECK(dtopk_ratio < 10.0);
  CHECK(slurp(dir / "report.csv").find("topkima,") != std::string::npos);

  // inconsistent t_ima is rejected before any output is produced
  const fs::path cfg = dir / "bad.json";
  write_text(cfg, R"({"cost_report": {"params": {"t_ima": 100.0}}})");
  CHECK(run({"cost-report", "--config", cfg.string(), "--out",
             (dir / "bad_out").string()}) == kExitConfigError);
}

TEST_CASE("cost-report SL sweep grows the advantage monotonically") {
  const fs::path dir = fresh_dir("cost_sl");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg,
             R"({"cost_report": {"sl_sweep": [256, 512, 1024, 2048, 4096]}})");
  CHECK(run({"cost-report", "--config", cfg.string(), "--out",
             dir.string()}) == kExitOk);

  std::istringstream csv(slurp(dir / "sweep_sl.csv"));
  std::string line;
  std::getline(csv, line);  // header
  double prev_conv = 0.0, prev_dtopk = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    REQUIRE(fields.size() == 6);
    const double conv_ratio = std::stod(fields[4]);
    const double dtopk_ratio = std::stod(fields[5]);
    CHECK(conv_ratio > prev_conv);
    CHECK(dtopk_ratio > prev_dtopk);
    prev_conv = conv_ratio;
    prev_dtopk = dtopk_ratio;
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("attention-demo runs the small preset in all modes") {
  const fs::path dir = fresh_dir("attn");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg, R"({"attention_demo": {
    "modes": ["float_reference", "quantized_topkima", "quantized_dtopk"],
    "seed": 5}})");
  CHECK(run({"attention-demo", "--preset", "small", "--config", cfg.string(),
             "--out", dir.string()}) == kExitOk);
  const json report = json::parse(slurp(dir / "report.json"));
  CHECK(report["modes"].contains("float_reference"));
  CHECK(report["modes"]["quantized_topkima"]["mean_alpha"] > 0.0);
  CHECK(report["partition_plan"]["total_k"] == 3);

  // effective config echoes back to an identical run
  const fs::path dir2 = fresh_dir("attn_echo");
  CHECK(run({"attention-demo", "--config",
             (dir / "effective_config.json").string(), "--out",
             dir2.string()}) == kExitOk);
  CHECK(slurp(dir / "report.json") == slurp(dir2 / "report.json"));
  CHECK(slurp(dir / "effective_config.json") ==
        slurp(dir2 / "effective_config.json"));
}

TEST_CASE("attention-demo accepts matrices from an input file") {
  const fs::path dir = fresh_dir("attn_inputs");
  const fs::path inputs = dir / "inputs.json";
  // 3-token sequence, d_model=2, d_k=d_v=1; keys separate token 1 clearly
  write_text(inputs, R"({
    "x":   [[1.0, 0.0], [0.0, 2.0], [0.5, 0.5]],
    "w_q": [[1.0], [0.0]],
    "w_k": [[0.0], [1.0]],
    "w_v": [[1.0], [1.0]]})");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg, std::string(R"({"attention_demo": {
    "inputs": ")") + inputs.generic_string() + R"(",
    "d_model": 2, "d_k": 1, "d_v": 1, "seq_len": 3, "heads": 1, "k": 1,
    "crossbar_rows": 8, "crossbar_cols": 8, "replica_rows": 2,
    "modes": ["float_reference", "quantized_topkima"]}})");
  CHECK(run({"attention-demo", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitOk);
  const json report = json::parse(slurp(dir / "o" / "report.json"));
  // one winner per row, always the key with the largest projection
  CHECK(report["modes"]["quantized_topkima"]["mean_overlap"] == 1.0);

  // shape mismatch inside the input file is a config error
  write_text(inputs, R"({
    "x":   [[1.0, 0.0], [0.0, 2.0]],
    "w_q": [[1.0], [0.0]],
    "w_k": [[0.0], [1.0]],
    "w_v": [[1.0], [1.0]]})");
  CHECK(run({"attention-demo", "--config", cfg.string(), "--out",
             (dir / "o2").string()}) == kExitConfigError);
}

TEST_CASE("tfcbp-train writes a trace and reports runtime failures") {
  const fs::path dir = fresh_dir("train");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg, R"({"tfcbp_train": {"epochs": 3, "train_samples": 64,
    "test_samples": 64, "variant": "tfcbp"}})");
  CHECK(run({"tfcbp-train", "--config", cfg.string(), "--out",
             dir.string()}) == kExitOk);
  const std::string csv = slurp(dir / "trace.csv");
  CHECK(csv.rfind("epoch,accuracy,loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  // divergence is a runtime failure, distinct from config errors
  write_text(cfg, R"({"tfcbp_train": {"epochs": 3, "lr": 1e9}})");
  CHECK(run({"tfcbp-train", "--config", cfg.string(), "--out",
             (dir / "diverge").string()}) == kExitRuntimeError);

  write_text(cfg, R"({"tfcbp_train": {"variant": "unknown"}})");
  CHECK(run({"tfcbp-train", "--config", cfg.string(), "--out",
             (dir / "bad").string()}) == kExitConfigError);
}

TEST_CASE("sweep writes one row per cell and resumes without rework") {
  const fs::path dir = fresh_dir("sweep");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg, R"({"sweep": {
    "grid": {"k": [1, 3], "crossbar": [32, 64]},
    "base": {"seq_len": 32, "d_model": 32, "d_k": 16, "d_v": 16,
             "replica_rows": 16},
    "seed": 9}})");
  CHECK(run({"sweep", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitOk);
  const std::string csv = slurp(dir / "o" / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 cells

  // a second run over the same output directory changes nothing
  CHECK(run({"sweep", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitOk);
  CHECK(slurp(dir / "o" / "sweep.csv") == csv);

  // same config into a fresh directory: byte-identical table
  CHECK(run({"sweep", "--config", cfg.string(), "--out",
             (dir / "o2").string()}) == kExitOk);
  CHECK(slurp(dir / "o2" / "sweep.csv") == csv);

  // the echoed config resumes the same output without conflicts
  CHECK(run({"sweep", "--config",
             (dir / "o" / "effective_config.json").string(), "--out",
             (dir / "o").string()}) == kExitOk);
  CHECK(slurp(dir / "o" / "sweep.csv") == csv);

  // a different grid over existing output is a conflict, not an overwrite
  write_text(cfg, R"({"sweep": {
    "grid": {"k": [1, 2], "crossbar": [32, 64]},
    "base": {"seq_len": 32, "d_model": 32, "d_k": 16, "d_v": 16,
             "replica_rows": 16},
    "seed": 9}})");
  CHECK(run({"sweep", "--config", cfg.string(), "--out",
             (dir / "o").string()}) == kExitRuntimeError);
  CHECK(slurp(dir / "o" / "sweep.csv") == csv);

  // empty grid is a config error
  write_text(cfg, R"({"sweep": {"grid": {}}})");
  CHECK(run({"sweep", "--config", cfg.string(), "--out",
             (dir / "o3").string()}) == kExitConfigError);
}

TEST_CASE("unknown subcommand and unknown section keys are config errors") {
  CHECK(run({"no-such-command"}) == kExitConfigError);

  const fs::path dir = fresh_dir("badsection");
  const fs::path cfg = dir / "cfg.json";
  write_text(cfg, R"({"unknown_section": {}})");
  CHECK(run({"simulate-macro", "--preset", "demo3", "--config", cfg.string(),
             "--out", dir.string()}) == kExitConfigError);

  // a section that is not an object is rejected the same way
  write_text(cfg, R"({"simulate_macro": [1, 2, 3]})");
  CHECK(run({"simulate-macro", "--config", cfg.string(), "--out",
             dir.string()}) == kExitConfigError);
}
