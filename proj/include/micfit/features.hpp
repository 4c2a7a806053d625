#pragma once
// Growth-curve feature extraction.  Each test well yields 24 features: 12
// from turbidity and 12 from redox, covering instantaneous derivatives at the
// time-to-result, curve integrals and maxima up to that time, ratios against
// the growth-control well, and timing offsets of the derivative peaks.

#include "micfit/loess.hpp"
#include "micfit/panel.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace micfit {

enum class Feature : int {
  T_FD = 0,  // turbidity first derivative at the time-to-result
  T_SD,      // turbidity second derivative at the time-to-result
  T_IN,      // integral of turbidity over [0, time-to-result]
  T_AB_M,    // max absolute turbidity
  T_FD_M,    // max turbidity first derivative
  T_SD_M,    // max turbidity second derivative
  T_AB_M_R,  // T.AB.M test / T.AB.M control
  T_FD_M_R,  // T.FD.M test / T.FD.M control
  T_SD_M_R,  // T.SD.M test / T.SD.M control
  T_IN_R,    // T.IN test / T.AB.M control (as printed; see FeatureOptions)
  T_FD_T,    // time of max first derivative, test minus control
  T_SD_T,    // time of max second derivative, test minus control
  R_FD,
  R_SD,
  R_IN,
  R_AB_M,
  R_FD_M,
  R_SD_M,
  R_AB_M_R,
  R_FD_M_R,
  R_SD_M_R,
  R_IN_R,
  R_FD_T,
  R_SD_T,
};

constexpr int kFeatureCount = 24;

inline const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "T.FD",     "T.SD",     "T.IN",     "T.AB.M",   "T.FD.M",   "T.SD.M",
      "T.AB.M.R", "T.FD.M.R", "T.SD.M.R", "T.IN.R",   "T.FD.T",   "T.SD.T",
      "R.FD",     "R.SD",     "R.IN",     "R.AB.M",   "R.FD.M",   "R.SD.M",
      "R.AB.M.R", "R.FD.M.R", "R.SD.M.R", "R.IN.R",   "R.FD.T",   "R.SD.T"};
  return names;
}

inline const char* feature_name(Feature f) { return feature_names()[static_cast<int>(f)]; }

inline Feature feature_from_name(const std::string& name) {
  for (int i = 0; i < kFeatureCount; ++i) {
    if (name == feature_names()[i]) return static_cast<Feature>(i);
  }
  throw std::invalid_argument("unknown feature name: " + name);
}

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<int>(f)]; }
  double& operator[](Feature f) { return values[static_cast<int>(f)]; }
};

struct FeatureOptions {
  // Table-as-printed divides the test-well integral by the control's max
  // absolute value; set true to divide by the control integral instead.
  bool in_ratio_uses_control_integral = false;
  double denominator_guard = 1e-9;
};

namespace detail {

struct SignalSummary {
  double fd_at_tr = 0.0;
  double sd_at_tr = 0.0;
  double integral = 0.0;
  double max_abs = 0.0;
  double max_fd = 0.0;
  double max_sd = 0.0;
  double t_max_fd = 0.0;
  double t_max_sd = 0.0;
};

// Grid of sample times in [0, t_result]; t_result is appended when it falls
// between samples so the window always ends at the time-to-result.
inline std::vector<double> feature_grid(const LoessCurve& curve, double t_result) {
  std::vector<double> grid;
  for (double t : curve.times()) {
    if (t > t_result + 1e-12) break;
    grid.push_back(t);
  }
  if (grid.empty() || t_result - grid.back() > 1e-12) grid.push_back(t_result);
  return grid;
}

inline SignalSummary summarize(const LoessCurve& curve, double t_result) {
  if (t_result < curve.t_min() - 1e-12 || t_result > curve.t_max() + 1e-12)
    throw std::domain_error("features: time-to-result outside curve domain");

  const std::vector<double> grid = feature_grid(curve, t_result);
  SignalSummary s;
  const auto at_tr = curve.eval_all(t_result);
  s.fd_at_tr = at_tr[1];
  s.sd_at_tr = at_tr[2];

  double prev_t = grid.front();
  auto first = curve.eval_all(prev_t);
  double prev_v = first[0];
  s.max_abs = std::abs(first[0]);
  s.max_fd = first[1];
  s.max_sd = first[2];
  s.t_max_fd = prev_t;
  s.t_max_sd = prev_t;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i];
    const auto [v, fd, sd] = curve.eval_all(t);
    s.integral += 0.5 * (v + prev_v) * (t - prev_t);
    s.max_abs = std::max(s.max_abs, std::abs(v));
    if (fd > s.max_fd) {
      s.max_fd = fd;
      s.t_max_fd = t;
    }
    if (sd > s.max_sd) {
      s.max_sd = sd;
      s.t_max_sd = t;
    }
    prev_t = t;
    prev_v = v;
  }
  return s;
}

inline double guarded_ratio(double num, double den, double guard) {
  if (std::abs(den) < guard) den = den < 0.0 ? -guard : guard;
  return num / den;
}

}  // namespace detail

// The control well must show signal: an (effectively) all-zero control
// max-absolute denominator is an error, not a NaN.
inline FeatureVector extract_features(const LoessCurve& test_turb, const LoessCurve& test_redox,
                                      const LoessCurve& control_turb,
                                      const LoessCurve& control_redox, double t_result,
                                      const FeatureOptions& opt = {}) {
  using detail::guarded_ratio;
  const auto tt = detail::summarize(test_turb, t_result);
  const auto tr = detail::summarize(test_redox, t_result);
  const auto ct = detail::summarize(control_turb, t_result);
  const auto cr = detail::summarize(control_redox, t_result);

  if (ct.max_abs < opt.denominator_guard || cr.max_abs < opt.denominator_guard)
    throw std::domain_error("features: control well has no measurable signal");

  FeatureVector f;
  const double g = opt.denominator_guard;

  f[Feature::T_FD] = tt.fd_at_tr;
  f[Feature::T_SD] = tt.sd_at_tr;
  f[Feature::T_IN] = tt.integral;
  f[Feature::T_AB_M] = tt.max_abs;
  f[Feature::T_FD_M] = tt.max_fd;
  f[Feature::T_SD_M] = tt.max_sd;
  f[Feature::T_AB_M_R] = guarded_ratio(tt.max_abs, ct.max_abs, g);
  f[Feature::T_FD_M_R] = guarded_ratio(tt.max_fd, ct.max_fd, g);
  f[Feature::T_SD_M_R] = guarded_ratio(tt.max_sd, ct.max_sd, g);
  f[Feature::T_IN_R] = guarded_ratio(
      tt.integral, opt.in_ratio_uses_control_integral ? ct.integral : ct.max_abs, g);
  f[Feature::T_FD_T] = tt.t_max_fd - ct.t_max_fd;
  f[Feature::T_SD_T] = tt.t_max_sd - ct.t_max_sd;

  f[Feature::R_FD] = tr.fd_at_tr;
  f[Feature::R_SD] = tr.sd_at_tr;
  f[Feature::R_IN] = tr.integral;
  f[Feature::R_AB_M] = tr.max_abs;
  f[Feature::R_FD_M] = tr.max_fd;
  f[Feature::R_SD_M] = tr.max_sd;
  f[Feature::R_AB_M_R] = guarded_ratio(tr.max_abs, cr.max_abs, g);
  f[Feature::R_FD_M_R] = guarded_ratio(tr.max_fd, cr.max_fd, g);
  f[Feature::R_SD_M_R] = guarded_ratio(tr.max_sd, cr.max_sd, g);
  f[Feature::R_IN_R] = guarded_ratio(
      tr.integral, opt.in_ratio_uses_control_integral ? cr.integral : cr.max_abs, g);
  f[Feature::R_FD_T] = tr.t_max_fd - cr.t_max_fd;
  f[Feature::R_SD_T] = tr.t_max_sd - cr.t_max_sd;
  return f;
}

// GROWTH label: 1 iff the well's dilution is below the reference MIC.  A
// reference above the grid makes every well a growth well.
inline int label_growth(double dilution, const RefMic& reference) {
  if (reference.above_grid) return 1;
  return dilution < reference.concentration ? 1 : 0;
}

}  // namespace micfit
