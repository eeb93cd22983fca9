#include "topkima/costmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace topkima {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

double pwm_input_time(double t_lsb, std::span<const int> scales,
                      PwmComposition mode) {
  if (t_lsb <= 0.0) throw std::invalid_argument("pwm_input_time: t_lsb must be > 0");
  if (scales.empty()) throw std::invalid_argument("pwm_input_time: no scales");
  double out = 0.0;
  for (int s : scales) {
    if (s < 1) throw std::invalid_argument("pwm_input_time: scales must be positive");
    const double pulse = t_lsb * s;
    out = (mode == PwmComposition::sum) ? out + pulse : std::max(out, pulse);
  }
  return out;
}

void CostParams::validate() const {
  if (d < 1) throw std::invalid_argument("CostParams: d must be >= 1");
  if (k < 1 || k > d) throw std::invalid_argument("CostParams: k must be in [1, d]");
  if (n_b < 0 || n_b > 20) throw std::invalid_argument("CostParams: n_b out of range");
  for (double t : {t_wr, t_pwm_inp, t_clk_ima, t_arb, t_clk_sort, t_nl_dig})
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("CostParams: timing constants must be >= 0");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("CostParams: alpha must be in (0, 1]");
  const double expected_ima = static_cast<double>(1 << n_b) * t_clk_ima;
  if (std::abs(t_ima - expected_ima) > 1e-9 * std::max(1.0, expected_ima))
    throw std::invalid_argument("CostParams: t_ima must equal 2^n_b * t_clk_ima");
  for (double e : {e_wr, e_ima_per_cycle, e_arb_per_event, e_nl_per_op,
                   e_sort_per_cycle})
    if (!(e >= 0.0) || !std::isfinite(e))
      throw std::invalid_argument("CostParams: energy constants must be >= 0");
}

CostParams CostParams::with_alpha(double measured) const {
  CostParams p = *this;
  p.alpha = measured;
  p.validate();
  return p;
}

CostParams CostParams::macro_65nm() {
  return CostParams{};  // defaults hold the 65 nm design point
}

double sort_cycles(const CostParams& p) {
  const double dd = static_cast<double>(p.d);
  return std::min(dd * std::log2(dd), dd * static_cast<double>(p.k));
}

double latency_conv(const CostParams& p) {
  return p.t_wr + p.d * (p.t_pwm_inp + p.t_ima + p.d * p.t_nl_dig);
}

double latency_dtopk(const CostParams& p) {
  const double t_sort = sort_cycles(p) * p.t_clk_sort;
  return p.t_wr + p.d * (p.t_pwm_inp + p.t_ima + t_sort + p.k * p.t_nl_dig);
}

double latency_topkima(const CostParams& p) {
  const double t_ima_arb = std::max(p.alpha * p.t_ima + p.t_arb,
                                    p.t_clk_ima + p.k * p.t_arb);
  return p.t_wr + p.d * (p.t_pwm_inp + t_ima_arb + p.k * p.t_nl_dig);
}

double energy_conv(const CostParams& p) {
  const double ramp = static_cast<double>(1 << p.n_b);
  return p.e_wr + p.d * (ramp * p.e_ima_per_cycle + p.d * p.e_nl_per_op);
}

double energy_dtopk(const CostParams& p) {
  const double ramp = static_cast<double>(1 << p.n_b);
  return p.e_wr + p.d * (ramp * p.e_ima_per_cycle +
                         sort_cycles(p) * p.e_sort_per_cycle +
                         p.k * p.e_nl_per_op);
}

double energy_topkima(const CostParams& p) {
  const double ramp = p.alpha * static_cast<double>(1 << p.n_b);
  return p.e_wr + p.d * (ramp * p.e_ima_per_cycle + p.k * p.e_arb_per_event +
                         p.k * p.e_nl_per_op);
}

nlohmann::json CostReport::to_json() const {
  return {{"latency_ns",
           {{"conv", latency_conv_ns},
            {"dtopk", latency_dtopk_ns},
            {"topkima", latency_topkima_ns}}},
          {"energy_pj",
           {{"conv", energy_conv_pj},
            {"dtopk", energy_dtopk_pj},
            {"topkima", energy_topkima_pj}}},
          {"latency_ratio",
           {{"conv_over_topkima", latency_ratio_conv},
            {"dtopk_over_topkima", latency_ratio_dtopk}}},
          {"energy_ratio",
           {{"conv_over_topkima", energy_ratio_conv},
            {"dtopk_over_topkima", energy_ratio_dtopk}}}};
}

std::string CostReport::to_csv() const {
  std::string out = "macro,latency_ns,energy_pj\n";
  out += "conv," + fmt(latency_conv_ns) + "," + fmt(energy_conv_pj) + "\n";
  out += "dtopk," + fmt(latency_dtopk_ns) + "," + fmt(energy_dtopk_pj) + "\n";
  out += "topkima," + fmt(latency_topkima_ns) + "," + fmt(energy_topkima_pj) + "\n";
  return out;
}

CostReport cost_report(const CostParams& p) {
  p.validate();
  CostReport r;
  r.latency_conv_ns = latency_conv(p);
  r.latency_dtopk_ns = latency_dtopk(p);
  r.latency_topkima_ns = latency_topkima(p);
  r.energy_conv_pj = energy_conv(p);
  r.energy_dtopk_pj = energy_dtopk(p);
  r.energy_topkima_pj = energy_topkima(p);
  r.latency_ratio_conv = r.latency_conv_ns / r.latency_topkima_ns;
  r.latency_ratio_dtopk = r.latency_dtopk_ns / r.latency_topkima_ns;
  r.energy_ratio_conv = r.energy_conv_pj / r.energy_topkima_pj;
  r.energy_ratio_dtopk = r.energy_dtopk_pj / r.energy_topkima_pj;
  return r;
}

}  // namespace topkima
