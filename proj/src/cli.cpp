#include "topkima/cli.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "topkima/attention.hpp"
#include "topkima/costmodel.hpp"
#include "topkima/ima.hpp"
#include "topkima/partition.hpp"
#include "topkima/rng.hpp"
#include "topkima/tfcbp.hpp"

namespace topkima {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object())
    throw ConfigError("section '" + context + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + context);
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& context) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + context + ": " +
                      e.what());
  }
}

struct Invocation {
  std::string config_path;
  std::string out_dir = "out";
  std::string preset;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool trace = false;
};

const std::set<std::string> kSections = {"simulate_macro", "cost_report",
                                         "attention_demo", "tfcbp_train",
                                         "sweep"};

json command_section(const Invocation& inv, const std::string& section) {
  if (inv.config_path.empty()) return json::object();
  const json file = load_json_file(inv.config_path);
  std::set<std::string> allowed = kSections;
  allowed.insert("command");  // present in echoed configs
  check_keys(file, allowed, "config file");
  if (!file.contains(section)) return json::object();
  const json& s = file.at(section);
  if (!s.is_object())
    throw ConfigError("section '" + section + "' must be a JSON object");
  return s;
}

void emit_outputs(const Invocation& inv, const std::string& command,
                  const std::string& section, const json& effective,
                  const std::vector<std::pair<std::string, std::string>>& files) {
  const fs::path out(inv.out_dir);
  fs::create_directories(out);
  const json echo{{"command", command}, {section, effective}};
  write_file(out / "effective_config.json", echo.dump(2) + "\n");
  for (const auto& [name, content] : files) {
    write_file(out / name, content);
    std::cout << "wrote " << (out / name).string() << "\n";
  }
}

// ---------------------------------------------------------------- simulate
int cmd_simulate_macro(const Invocation& inv) {
  json cfg = command_section(inv, "simulate_macro");
  check_keys(cfg, {"codes", "generate", "k", "n_b", "seed", "trace"},
             "simulate_macro");

  json eff = json::object();
  if (inv.preset == "demo3") {
    eff["codes"] = json::array({5, 12, 20});
    eff["k"] = 1;
    eff["n_b"] = 5;
  } else if (!inv.preset.empty()) {
    throw ConfigError("unknown preset '" + inv.preset + "' for simulate-macro");
  } else {
    eff["k"] = 1;
    eff["n_b"] = 5;
  }
  eff["seed"] = 1;
  eff["trace"] = false;
  for (const auto& [key, value] : cfg.items()) eff[key] = value;
  if (inv.seed_set) eff["seed"] = inv.seed;
  if (inv.trace) eff["trace"] = true;

  if (eff.contains("codes") && eff.contains("generate"))
    throw ConfigError("simulate_macro: give either 'codes' or 'generate', not both");
  if (!eff.contains("codes") && !eff.contains("generate"))
    throw ConfigError("simulate_macro: one of 'codes' or 'generate' is required");

  const int k = get_as<int>(eff, "k", "simulate_macro");
  const int n_b = get_as<int>(eff, "n_b", "simulate_macro");
  const std::uint64_t seed = get_as<std::uint64_t>(eff, "seed", "simulate_macro");
  const bool want_trace = get_as<bool>(eff, "trace", "simulate_macro");
  if (n_b < 1 || n_b > 20) throw ConfigError("simulate_macro: n_b out of range");

  std::vector<std::vector<int>> runs;
  if (eff.contains("codes")) {
    runs.push_back(get_as<std::vector<int>>(eff, "codes", "simulate_macro"));
  } else {
    const json& gen_cfg = eff.at("generate");
    check_keys(gen_cfg, {"d", "runs"}, "simulate_macro.generate");
    const int d = get_as<int>(gen_cfg, "d", "simulate_macro.generate");
    const int n_runs = gen_cfg.contains("runs")
                           ? get_as<int>(gen_cfg, "runs", "simulate_macro.generate")
                           : 1;
    if (d < 1 || n_runs < 1)
      throw ConfigError("simulate_macro.generate: d and runs must be positive");
    const int max_code = (1 << n_b) - 1;
    for (int r = 0; r < n_runs; ++r) {
      std::mt19937_64 gen(mix64(seed, 1000 + r));
      std::uniform_int_distribution<int> dist(0, max_code);
      std::vector<int> codes(d);
      for (int& c : codes) c = dist(gen);
      runs.push_back(std::move(codes));
    }
  }

  std::string trace_text;
  std::vector<TopKSelection> selections;
  selections.reserve(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (want_trace) trace_text += "# run " + std::to_string(r) + "\n";
    selections.push_back(
        run_conversion(runs[r], k, n_b, want_trace ? &trace_text : nullptr));
  }

  json sel_json = json::array();
  for (const auto& s : selections) {
    json winners = json::array();
    for (const auto& w : s.winners)
      winners.push_back(
          {{"column", w.column}, {"code", w.code}, {"cycle", w.cycle}});
    sel_json.push_back(
        {{"winners", winners}, {"stop_cycle", s.stop_cycle}, {"alpha", s.alpha}});
  }
  const json report{{"selections", sel_json},
                    {"alpha_mean", measure_alpha(selections)}};

  std::vector<std::pair<std::string, std::string>> files{
      {"report.json", report.dump(2) + "\n"}};
  if (want_trace) files.emplace_back("trace.txt", trace_text);
  emit_outputs(inv, "simulate-macro", "simulate_macro", eff, files);
  return kExitOk;
}

// -------------------------------------------------------------- cost report
CostParams params_from_json(const json& obj, const std::string& context) {
  CostParams p = CostParams::macro_65nm();
  check_keys(obj,
             {"d", "k", "n_b", "t_wr", "t_pwm_inp", "t_clk_ima", "t_ima",
              "t_arb", "t_clk_sort", "t_nl_dig", "alpha", "e_wr",
              "e_ima_per_cycle", "e_arb_per_event", "e_nl_per_op",
              "e_sort_per_cycle"},
             context);
  const auto set_int = [&](const char* key, int& field) {
    if (obj.contains(key)) field = get_as<int>(obj, key, context);
  };
  const auto set_dbl = [&](const char* key, double& field) {
    if (obj.contains(key)) field = get_as<double>(obj, key, context);
  };
  set_int("d", p.d);
  set_int("k", p.k);
  set_int("n_b", p.n_b);
  set_dbl("t_wr", p.t_wr);
  set_dbl("t_pwm_inp", p.t_pwm_inp);
  set_dbl("t_clk_ima", p.t_clk_ima);
  set_dbl("t_ima", p.t_ima);
  set_dbl("t_arb", p.t_arb);
  set_dbl("t_clk_sort", p.t_clk_sort);
  set_dbl("t_nl_dig", p.t_nl_dig);
  set_dbl("alpha", p.alpha);
  set_dbl("e_wr", p.e_wr);
  set_dbl("e_ima_per_cycle", p.e_ima_per_cycle);
  set_dbl("e_arb_per_event", p.e_arb_per_event);
  set_dbl("e_nl_per_op", p.e_nl_per_op);
  set_dbl("e_sort_per_cycle", p.e_sort_per_cycle);
  return p;
}

json params_to_json(const CostParams& p) {
  return {{"d", p.d},
          {"k", p.k},
          {"n_b", p.n_b},
          {"t_wr", p.t_wr},
          {"t_pwm_inp", p.t_pwm_inp},
          {"t_clk_ima", p.t_clk_ima},
          {"t_ima", p.t_ima},
          {"t_arb", p.t_arb},
          {"t_clk_sort", p.t_clk_sort},
          {"t_nl_dig", p.t_nl_dig},
          {"alpha", p.alpha},
          {"e_wr", p.e_wr},
          {"e_ima_per_cycle", p.e_ima_per_cycle},
          {"e_arb_per_event", p.e_arb_per_event},
          {"e_nl_per_op", p.e_nl_per_op},
          {"e_sort_per_cycle", p.e_sort_per_cycle}};
}

int cmd_cost_report(const Invocation& inv) {
  json cfg = command_section(inv, "cost_report");
  check_keys(cfg, {"params", "pwm", "sl_sweep"}, "cost_report");

  if (!inv.preset.empty() && inv.preset != "macro65nm")
    throw ConfigError("unknown preset '" + inv.preset + "' for cost-report");

  CostParams p =
      params_from_json(cfg.value("params", json::object()), "cost_report.params");
  if (cfg.contains("pwm")) {
    const json& pwm = cfg.at("pwm");
    check_keys(pwm, {"t_lsb", "composition", "scales"}, "cost_report.pwm");
    const double t_lsb = get_as<double>(pwm, "t_lsb", "cost_report.pwm");
    const std::string comp =
        pwm.contains("composition")
            ? get_as<std::string>(pwm, "composition", "cost_report.pwm")
            : "sum";
    std::vector<int> scales{1, 2, 4};
    if (pwm.contains("scales"))
      scales = get_as<std::vector<int>>(pwm, "scales", "cost_report.pwm");
    PwmComposition mode;
    if (comp == "sum")
      mode = PwmComposition::sum;
    else if (comp == "max")
      mode = PwmComposition::max_pulse;
    else
      throw ConfigError("cost_report.pwm.composition must be 'sum' or 'max'");
    try {
      p.t_pwm_inp = pwm_input_time(t_lsb, scales, mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("cost_report.pwm: ") + e.what());
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("cost_report: ") + e.what());
  }

  const CostReport report = cost_report(p);

  std::string sl_csv;
  if (cfg.contains("sl_sweep")) {
    const auto sls = get_as<std::vector<int>>(cfg, "sl_sweep", "cost_report");
    if (sls.empty()) throw ConfigError("cost_report.sl_sweep must be non-empty");
    sl_csv =
        "sl,latency_conv_ns,latency_dtopk_ns,latency_topkima_ns,"
        "conv_over_topkima,dtopk_over_topkima\n";
    for (int sl : sls) {
      CostParams ps = p;
      ps.d = sl;
      try {
        ps.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("cost_report.sl_sweep: ") + e.what());
      }
      const CostReport r = cost_report(ps);
      sl_csv += std::to_string(sl) + "," + fmt(r.latency_conv_ns) + "," +
                fmt(r.latency_dtopk_ns) + "," + fmt(r.latency_topkima_ns) + "," +
                fmt(r.latency_ratio_conv) + "," + fmt(r.latency_ratio_dtopk) +
                "\n";
    }
  }

  json eff{{"params", params_to_json(p)}};
  if (cfg.contains("sl_sweep")) eff["sl_sweep"] = cfg.at("sl_sweep");

  std::vector<std::pair<std::string, std::string>> files{
      {"report.json", report.to_json().dump(2) + "\n"},
      {"report.csv", report.to_csv()}};
  if (!sl_csv.empty()) files.emplace_back("sweep_sl.csv", sl_csv);
  emit_outputs(inv, "cost-report", "cost_report", eff, files);
  return kExitOk;
}

// ----------------------------------------------------------- attention demo
QuantConfig quant_from_json(const json& obj, QuantConfig q,
                            const std::string& context) {
  check_keys(obj,
             {"activation_bits", "weight_levels", "adc_bits",
              "activation_window", "cells_per_weight", "cell_scales"},
             context);
  if (obj.contains("activation_bits"))
    q.activation_bits = get_as<int>(obj, "activation_bits", context);
  if (obj.contains("weight_levels"))
    q.weight_levels = get_as<int>(obj, "weight_levels", context);
  if (obj.contains("adc_bits")) q.adc_bits = get_as<int>(obj, "adc_bits", context);
  if (obj.contains("activation_window")) {
    const auto win = get_as<std::vector<double>>(obj, "activation_window", context);
    if (win.size() != 2)
      throw ConfigError(context + ".activation_window must be [min, max]");
    q.activation_window = {win[0], win[1]};
  }
  if (obj.contains("cells_per_weight"))
    q.cells_per_weight = get_as<int>(obj, "cells_per_weight", context);
  if (obj.contains("cell_scales"))
    q.cell_scales = get_as<std::vector<int>>(obj, "cell_scales", context);
  return q;
}

json quant_to_json(const QuantConfig& q) {
  return {{"activation_bits", q.activation_bits},
          {"weight_levels", q.weight_levels},
          {"adc_bits", q.adc_bits},
          {"activation_window",
           {q.activation_window.first, q.activation_window.second}},
          {"cells_per_weight", q.cells_per_weight},
          {"cell_scales", q.cell_scales}};
}

AttentionConfig attention_from_json(const json& obj, AttentionConfig cfg,
                                    const std::string& context) {
  check_keys(obj,
             {"d_model", "d_k", "d_v", "seq_len", "heads", "k", "quant",
              "crossbar_rows", "crossbar_cols", "replica_rows", "sigma",
              "seed", "bypass_quantization"},
             context);
  if (obj.contains("d_model")) cfg.d_model = get_as<int>(obj, "d_model", context);
  if (obj.contains("d_k")) cfg.d_k = get_as<int>(obj, "d_k", context);
  if (obj.contains("d_v")) cfg.d_v = get_as<int>(obj, "d_v", context);
  if (obj.contains("seq_len")) cfg.seq_len = get_as<int>(obj, "seq_len", context);
  if (obj.contains("heads")) cfg.heads = get_as<int>(obj, "heads", context);
  if (obj.contains("k")) cfg.k = get_as<int>(obj, "k", context);
  if (obj.contains("quant"))
    cfg.quant = quant_from_json(obj.at("quant"), cfg.quant, context + ".quant");
  if (obj.contains("crossbar_rows"))
    cfg.crossbar_rows = get_as<int>(obj, "crossbar_rows", context);
  if (obj.contains("crossbar_cols"))
    cfg.crossbar_cols = get_as<int>(obj, "crossbar_cols", context);
  if (obj.contains("replica_rows"))
    cfg.replica_rows = get_as<int>(obj, "replica_rows", context);
  if (obj.contains("sigma")) cfg.noise_sigma = get_as<double>(obj, "sigma", context);
  if (obj.contains("seed")) cfg.seed = get_as<std::uint64_t>(obj, "seed", context);
  if (obj.contains("bypass_quantization"))
    cfg.bypass_quantization = get_as<bool>(obj, "bypass_quantization", context);
  return cfg;
}

json attention_to_json(const AttentionConfig& cfg) {
  return {{"d_model", cfg.d_model},
          {"d_k", cfg.d_k},
          {"d_v", cfg.d_v},
          {"seq_len", cfg.seq_len},
          {"heads", cfg.heads},
          {"k", cfg.k},
          {"quant", quant_to_json(cfg.quant)},
          {"crossbar_rows", cfg.crossbar_rows},
          {"crossbar_cols", cfg.crossbar_cols},
          {"replica_rows", cfg.replica_rows},
          {"sigma", cfg.noise_sigma},
          {"seed", cfg.seed},
          {"bypass_quantization", cfg.bypass_quantization}};
}

AttentionMode mode_from_string(const std::string& s) {
  if (s == "float_reference") return AttentionMode::float_reference;
  if (s == "quantized_topkima") return AttentionMode::quantized_topkima;
  if (s == "quantized_dtopk") return AttentionMode::quantized_dtopk;
  throw ConfigError("unknown attention mode '" + s + "'");
}

Matrix matrix_from_json(const json& rows, const std::string& context) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw ConfigError(context + " must be a non-empty array of rows");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != m.cols())
      throw ConfigError(context + " rows must have equal length");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!rows[i][j].is_number())
        throw ConfigError(context + " entries must be numbers");
      m(i, j) = rows[i][j].get<double>();
    }
  }
  return m;
}

int cmd_attention_demo(const Invocation& inv) {
  json cfg = command_section(inv, "attention_demo");
  std::vector<std::string> modes{"quantized_topkima"};
  if (cfg.contains("modes")) {
    modes = get_as<std::vector<std::string>>(cfg, "modes", "attention_demo");
    cfg.erase("modes");
  }
  if (modes.empty()) throw ConfigError("attention_demo.modes must be non-empty");
  std::string inputs_path;
  if (cfg.contains("inputs")) {
    inputs_path = get_as<std::string>(cfg, "inputs", "attention_demo");
    cfg.erase("inputs");
  }

  AttentionConfig start = AttentionConfig::demo_small();
  if (inv.preset == "bert-base")
    start = AttentionConfig::bert_base();
  else if (!inv.preset.empty() && inv.preset != "small")
    throw ConfigError("unknown preset '" + inv.preset + "' for attention-demo");
  AttentionConfig acfg = attention_from_json(cfg, start, "attention_demo");
  if (inv.seed_set) acfg.seed = inv.seed;
  try {
    acfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("attention_demo: ") + e.what());
  }

  // matrices come from an input file when given, otherwise from the seed
  Matrix x;
  AttentionWeights w;
  if (!inputs_path.empty()) {
    const json inputs = load_json_file(inputs_path);
    check_keys(inputs, {"x", "w_q", "w_k", "w_v"}, "attention inputs");
    for (const char* key : {"x", "w_q", "w_k", "w_v"})
      if (!inputs.contains(key))
        throw ConfigError(std::string("attention inputs: missing '") + key + "'");
    x = matrix_from_json(inputs.at("x"), "inputs.x");
    w.w_q = matrix_from_json(inputs.at("w_q"), "inputs.w_q");
    w.w_k = matrix_from_json(inputs.at("w_k"), "inputs.w_k");
    w.w_v = matrix_from_json(inputs.at("w_v"), "inputs.w_v");
  } else {
    x = random_gaussian(acfg.seq_len, acfg.d_model, mix64(acfg.seed, 10));
    w = AttentionWeights::random(acfg, acfg.seed);
  }

  json per_mode = json::object();
  for (const std::string& m : modes) {
    AttentionConfig run_cfg = acfg;
    run_cfg.mode = mode_from_string(m);
    const AttentionResult res = attention_forward(x, w, run_cfg);
    per_mode[m] = {{"mean_overlap", res.diag.mean_overlap},
                   {"output_mse", res.diag.output_mse},
                   {"mean_alpha", res.diag.mean_alpha}};
  }

  json report{{"modes", per_mode}};
  try {
    const PartitionPlan plan = plan_partition(
        acfg.seq_len, acfg.d_k, acfg.quant,
        {acfg.crossbar_rows, acfg.crossbar_cols}, acfg.replica_rows, acfg.k);
    report["partition_plan"] = plan.to_json();
  } catch (const std::invalid_argument&) {
    // geometry cannot hold the head; the quantized modes would have thrown
  }

  json eff = attention_to_json(acfg);
  eff["modes"] = modes;
  if (!inputs_path.empty()) eff["inputs"] = inputs_path;
  emit_outputs(inv, "attention-demo", "attention_demo", eff,
               {{"report.json", report.dump(2) + "\n"}});
  return kExitOk;
}

// -------------------------------------------------------------- tfcbp train
int cmd_tfcbp_train(const Invocation& inv) {
  json cfg = command_section(inv, "tfcbp_train");
  check_keys(cfg,
             {"variant", "seq_len", "num_classes", "k", "train_samples",
              "test_samples", "epochs", "lr", "seed", "qat", "score_window",
              "score_bits"},
             "tfcbp_train");
  if (!inv.preset.empty()) throw ConfigError("tfcbp-train has no presets");

  ToyTaskConfig tcfg;
  std::string variant_name = "tfcbp";
  if (cfg.contains("variant"))
    variant_name = get_as<std::string>(cfg, "variant", "tfcbp_train");
  if (cfg.contains("seq_len")) tcfg.seq_len = get_as<int>(cfg, "seq_len", "tfcbp_train");
  if (cfg.contains("num_classes"))
    tcfg.num_classes = get_as<int>(cfg, "num_classes", "tfcbp_train");
  if (cfg.contains("k")) tcfg.k = get_as<int>(cfg, "k", "tfcbp_train");
  if (cfg.contains("train_samples"))
    tcfg.train_samples = get_as<int>(cfg, "train_samples", "tfcbp_train");
  if (cfg.contains("test_samples"))
    tcfg.test_samples = get_as<int>(cfg, "test_samples", "tfcbp_train");
  if (cfg.contains("epochs")) tcfg.epochs = get_as<int>(cfg, "epochs", "tfcbp_train");
  if (cfg.contains("lr")) tcfg.lr = get_as<double>(cfg, "lr", "tfcbp_train");
  if (cfg.contains("seed"))
    tcfg.seed = get_as<std::uint64_t>(cfg, "seed", "tfcbp_train");
  if (cfg.contains("qat")) tcfg.qat = get_as<bool>(cfg, "qat", "tfcbp_train");
  if (cfg.contains("score_window"))
    tcfg.score_window = get_as<double>(cfg, "score_window", "tfcbp_train");
  if (cfg.contains("score_bits"))
    tcfg.score_bits = get_as<int>(cfg, "score_bits", "tfcbp_train");
  if (inv.seed_set) tcfg.seed = inv.seed;

  TrainVariant variant;
  if (variant_name == "tfcbp")
    variant = TrainVariant::tfcbp;
  else if (variant_name == "naive_topk")
    variant = TrainVariant::naive_topk;
  else if (variant_name == "full")
    variant = TrainVariant::full;
  else
    throw ConfigError("unknown training variant '" + variant_name + "'");
  try {
    tcfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("tfcbp_train: ") + e.what());
  }

  const auto trace = toy_train(tcfg, variant);

  std::string csv = "epoch,accuracy,loss\n";
  for (const auto& e : trace)
    csv += std::to_string(e.epoch) + "," + fmt(e.accuracy) + "," + fmt(e.loss) + "\n";
  const json report{{"variant", variant_name},
                    {"epochs", tcfg.epochs},
                    {"final_accuracy", trace.back().accuracy},
                    {"final_loss", trace.back().loss}};

  const json eff{{"variant", variant_name},
                 {"seq_len", tcfg.seq_len},
                 {"num_classes", tcfg.num_classes},
                 {"k", tcfg.k},
                 {"train_samples", tcfg.train_samples},
                 {"test_samples", tcfg.test_samples},
                 {"epochs", tcfg.epochs},
                 {"lr", tcfg.lr},
                 {"seed", tcfg.seed},
                 {"qat", tcfg.qat},
                 {"score_window", tcfg.score_window},
                 {"score_bits", tcfg.score_bits}};
  emit_outputs(inv, "tfcbp-train", "tfcbp_train", eff,
               {{"report.json", report.dump(2) + "\n"}, {"trace.csv", csv}});
  return kExitOk;
}

// --------------------------------------------------------------------- sweep
int cmd_sweep(const Invocation& inv) {
  json cfg = command_section(inv, "sweep");
  check_keys(cfg, {"grid", "base", "cost", "seed"}, "sweep");
  if (!cfg.contains("grid")) throw ConfigError("sweep: missing 'grid'");
  const json& grid = cfg.at("grid");
  check_keys(grid, {"k", "sl", "crossbar", "sigma"}, "sweep.grid");
  if (grid.empty()) throw ConfigError("sweep.grid must name at least one axis");

  AttentionConfig base;
  base.d_model = 64;
  base.d_k = 16;
  base.d_v = 16;
  base.seq_len = 64;
  base.heads = 1;
  base.k = 5;
  base.crossbar_rows = 64;
  base.crossbar_cols = 64;
  base.replica_rows = 16;
  if (cfg.contains("base"))
    base = attention_from_json(cfg.at("base"), base, "sweep.base");

  std::uint64_t seed = base.seed;
  if (cfg.contains("seed")) seed = get_as<std::uint64_t>(cfg, "seed", "sweep");
  if (inv.seed_set) seed = inv.seed;

  const CostParams cost_base =
      params_from_json(cfg.value("cost", json::object()), "sweep.cost");

  const auto axis_ints = [&](const char* name, int fallback) {
    if (!grid.contains(name)) return std::vector<int>{fallback};
    auto v = get_as<std::vector<int>>(grid, name, "sweep.grid");
    if (v.empty()) throw ConfigError(std::string("sweep.grid.") + name + " is empty");
    return v;
  };
  const std::vector<int> ks = axis_ints("k", base.k);
  const std::vector<int> sls = axis_ints("sl", base.seq_len);
  const std::vector<int> xbars = axis_ints("crossbar", base.crossbar_rows);
  std::vector<double> sigmas{base.noise_sigma};
  if (grid.contains("sigma")) {
    sigmas = get_as<std::vector<double>>(grid, "sigma", "sweep.grid");
    if (sigmas.empty()) throw ConfigError("sweep.grid.sigma is empty");
  }

  // validate every cell before running any
  for (int k : ks)
    for (int sl : sls)
      for (int xb : xbars)
        for (double sg : sigmas) {
          if (k < 1 || k > sl)
            throw ConfigError("sweep: cell k=" + std::to_string(k) +
                              " invalid for sl=" + std::to_string(sl));
          if (xb - base.replica_rows < base.d_k)
            throw ConfigError("sweep: crossbar " + std::to_string(xb) +
                              " cannot fit d_k=" + std::to_string(base.d_k) +
                              " plus replica rows");
          if (!(sg >= 0.0)) throw ConfigError("sweep: sigma must be >= 0");
        }

  const json eff{{"grid", grid},
                 {"base", attention_to_json(base)},
                 {"cost", params_to_json(cost_base)},
                 {"seed", seed}};
  const json echo{{"command", "sweep"}, {"sweep", eff}};
  const std::string echo_text = echo.dump(2) + "\n";

  const fs::path out(inv.out_dir);
  const fs::path csv_path = out / "sweep.csv";
  const fs::path echo_path = out / "effective_config.json";
  const std::string header =
      "k,sl,crossbar,sigma,seed,mean_overlap,output_mse,mean_alpha,"
      "conv_over_topkima,dtopk_over_topkima\n";

  std::set<std::string> done;
  std::string existing;
  if (fs::exists(csv_path)) {
    if (!fs::exists(echo_path))
      throw std::runtime_error("sweep: found partial output " + csv_path.string() +
                               " without its effective config; refusing to overwrite");
    if (read_file(echo_path) != echo_text)
      throw std::runtime_error("sweep: existing output in " + out.string() +
                               " was produced by a different configuration; "
                               "refusing to overwrite");
    existing = read_file(csv_path);
    std::istringstream lines(existing);
    std::string line;
    std::getline(lines, line);
    if (line + "\n" != header)
      throw std::runtime_error("sweep: existing sweep.csv has a different schema");
    while (std::getline(lines, line)) {
      int commas = 0;
      std::size_t pos = 0;
      for (; pos < line.size() && commas < 5; ++pos)
        if (line[pos] == ',') ++commas;
      if (commas == 5) done.insert(line.substr(0, pos - 1));
    }
  } else {
    existing = header;
  }

  std::string body;
  for (int k : ks)
    for (int sl : sls)
      for (int xb : xbars)
        for (double sg : sigmas) {
          const std::uint64_t cell_seed =
              mix64(seed, static_cast<std::uint64_t>(k),
                    mix64(static_cast<std::uint64_t>(sl),
                          static_cast<std::uint64_t>(xb)),
                    std::bit_cast<std::uint64_t>(sg));
          const std::string key = std::to_string(k) + "," + std::to_string(sl) +
                                  "," + std::to_string(xb) + "," + fmt(sg) + "," +
                                  std::to_string(cell_seed);
          if (done.count(key)) continue;

          AttentionConfig acfg = base;
          acfg.k = k;
          acfg.seq_len = sl;
          acfg.crossbar_rows = xb;
          acfg.crossbar_cols = xb;
          acfg.noise_sigma = sg;
          acfg.seed = cell_seed;
          acfg.mode = AttentionMode::quantized_topkima;
          acfg.validate();
          const Matrix x =
              random_gaussian(acfg.seq_len, acfg.d_model, mix64(cell_seed, 10));
          const AttentionWeights w = AttentionWeights::random(acfg, cell_seed);
          const AttentionResult res = attention_forward(x, w, acfg);

          CostParams p = cost_base;
          p.d = sl;
          p.k = k;
          p.alpha = res.diag.mean_alpha;
          p.validate();
          const CostReport cr = cost_report(p);

          body += key + "," + fmt(res.diag.mean_overlap) + "," +
                  fmt(res.diag.output_mse) + "," + fmt(res.diag.mean_alpha) + "," +
                  fmt(cr.latency_ratio_conv) + "," + fmt(cr.latency_ratio_dtopk) +
                  "\n";
        }

  fs::create_directories(out);
  write_file(echo_path, echo_text);
  write_file(csv_path, existing + body);
  std::cout << "wrote " << csv_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Behavioral simulator and cost model for top-k in-memory-ADC "
               "softmax attention"};
  app.require_subcommand(1);

  Invocation inv;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "JSON configuration file");
    sub->add_option("--out", inv.out_dir, "output directory")
        ->capture_default_str();
    sub->add_option("--preset", inv.preset, "named built-in configuration");
    sub->add_option("--seed", inv.seed, "seed override")
        ->each([&](const std::string&) { inv.seed_set = true; });
    sub->add_flag("--trace", inv.trace, "dump per-cycle conversion trace");
  };

  CLI::App* sim =
      app.add_subcommand("simulate-macro", "run ramp conversions on code vectors");
  CLI::App* cost = app.add_subcommand(
      "cost-report", "latency/energy comparison of softmax macros");
  CLI::App* attn = app.add_subcommand("attention-demo",
                                      "end-to-end attention with diagnostics");
  CLI::App* train =
      app.add_subcommand("tfcbp-train", "train the toy attention classifier");
  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep to CSV");
  for (CLI::App* sub : {sim, cost, attn, train, sweep}) add_common(sub);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (sim->parsed()) return cmd_simulate_macro(inv);
    if (cost->parsed()) return cmd_cost_report(inv);
    if (attn->parsed()) return cmd_attention_demo(inv);
    if (train->parsed()) return cmd_tfcbp_train(inv);
    if (sweep->parsed()) return cmd_sweep(inv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace topkima
