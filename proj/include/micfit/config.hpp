#pragma once
// Pipeline configuration.  One JSON document covers every stage; absent keys
// keep their defaults, which mirror the published constants (redox thresholds
// 0.07/0.2, 16 h horizon, loss weights 5/1/0, 65% training split).

#include "micfit/evaluate.hpp"
#include "micfit/features.hpp"
#include "micfit/mic.hpp"
#include "micfit/model_select.hpp"
#include "micfit/readiness.hpp"
#include "micfit/simulate.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace micfit {

struct SplitConfig {
  double fraction = 0.65;
  std::uint64_t seed = 7;
};

struct PipelineConfig {
  SimulationConfig sim;
  double smoothing_span = 0.5;
  ReadinessParams readiness;
  FeatureOptions features;
  SearchOptions selection;
  LossWeights loss;
  double call_threshold = 0.9;
  SplitConfig split;
  SirBreakpoints breakpoints;

  void validate() const {
    sim.validate();
    if (!(smoothing_span > 0.0 && smoothing_span <= 1.0))
      throw std::invalid_argument("config: smoothing_span must be in (0,1]");
    readiness.validate();
    loss.validate();
    if (!(call_threshold > 0.0 && call_threshold <= 1.0))
      throw std::invalid_argument("config: call_threshold must be in (0,1]");
    if (!(split.fraction > 0.0 && split.fraction < 1.0))
      throw std::invalid_argument("config: split fraction must be in (0,1)");
  }
};

namespace detail {

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void maybe_get_interval(const nlohmann::json& j, const char* key, Interval& out) {
  if (j.contains(key)) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument(std::string("config: ") + key +
                                                   " must be a [lo, hi] pair");
    out = Interval{v[0], v[1]};
  }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::maybe_get;
  PipelineConfig c;
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    maybe_get(s, "n_panels", c.sim.n_panels);
    maybe_get(s, "dilutions", c.sim.dilutions);
    maybe_get(s, "tick_minutes", c.sim.tick_minutes);
    maybe_get(s, "max_hours", c.sim.max_hours);
    detail::maybe_get_interval(s, "growth_rate_range", c.sim.growth_rate_range);
    detail::maybe_get_interval(s, "inflection_time_range", c.sim.inflection_time_range);
    detail::maybe_get_interval(s, "asymptote_range", c.sim.asymptote_range);
    maybe_get(s, "noise_sd", c.sim.noise_sd);
    maybe_get(s, "outlier_rate", c.sim.outlier_rate);
    maybe_get(s, "offscale_mic_rate", c.sim.offscale_mic_rate);
    maybe_get(s, "seed", c.sim.seed);
  }
  maybe_get(j, "smoothing_span", c.smoothing_span);
  if (j.contains("readiness")) {
    const auto& r = j.at("readiness");
    maybe_get(r, "low_redox", c.readiness.low_redox);
    maybe_get(r, "high_redox", c.readiness.high_redox);
    maybe_get(r, "max_hours", c.readiness.max_hours);
    maybe_get(r, "fast_cutoff_hours", c.readiness.fast_cutoff_hours);
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    maybe_get(f, "in_ratio_uses_control_integral", c.features.in_ratio_uses_control_integral);
    maybe_get(f, "denominator_guard", c.features.denominator_guard);
  }
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    maybe_get(s, "exhaustive_cap", c.selection.exhaustive_cap);
    maybe_get(s, "top_k", c.selection.top_k);
    maybe_get(s, "irls_tol", c.selection.irls.tol);
    maybe_get(s, "irls_max_iter", c.selection.irls.max_iter);
    maybe_get(s, "separation_cap", c.selection.irls.separation_cap);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    maybe_get(l, "under", c.loss.under);
    maybe_get(l, "over", c.loss.over);
    maybe_get(l, "within_one", c.loss.within_one);
  }
  maybe_get(j, "call_threshold", c.call_threshold);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    maybe_get(s, "fraction", c.split.fraction);
    maybe_get(s, "seed", c.split.seed);
  }
  if (j.contains("breakpoints")) {
    const auto& b = j.at("breakpoints");
    maybe_get(b, "susceptible_max", c.breakpoints.susceptible_max);
    maybe_get(b, "resistant_min", c.breakpoints.resistant_min);
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace micfit
