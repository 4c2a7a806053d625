#pragma once
// Incubation state machine over the growth-control well.  The control redox
// curve decides whether to keep incubating, report a failed panel, or freeze
// the time-to-result at which features are extracted.

#include "micfit/loess.hpp"

#include <algorithm>
#include <stdexcept>

namespace micfit {

struct ReadinessParams {
  double low_redox = 0.07;        // at or below: insufficient growth
  double high_redox = 0.2;        // above: a call can be attempted
  double max_hours = 16.0;        // past this, the panel is failed
  double fast_cutoff_hours = 8.0; // crossing time at or below: fast grower

  void validate() const {
    if (!(0.0 < low_redox && low_redox < high_redox && high_redox < 1.0))
      throw std::invalid_argument("readiness: need 0 < low_redox < high_redox < 1");
    if (!(0.0 < fast_cutoff_hours && fast_cutoff_hours < max_hours))
      throw std::invalid_argument("readiness: need 0 < fast_cutoff < max_hours");
  }
};

enum class GrowthClass { fast, slow };

struct IncubationStatus {
  enum class Kind { insufficient, keep_incubating, ready, failed };

  Kind kind = Kind::insufficient;
  double time_to_result = 0.0;               // set when ready
  GrowthClass growth_class = GrowthClass::slow;  // set when ready

  bool is_ready() const { return kind == Kind::ready; }
  bool is_failed() const { return kind == Kind::failed; }

  static IncubationStatus insufficient() { return {Kind::insufficient, 0.0, GrowthClass::slow}; }
  static IncubationStatus keep_incubating() {
    return {Kind::keep_incubating, 0.0, GrowthClass::slow};
  }
  static IncubationStatus ready(double ttr, GrowthClass c) { return {Kind::ready, ttr, c}; }
  static IncubationStatus failed() { return {Kind::failed, 0.0, GrowthClass::slow}; }

  const char* name() const {
    switch (kind) {
      case Kind::insufficient: return "insufficient";
      case Kind::keep_incubating: return "continue";
      case Kind::ready: return "ready";
      case Kind::failed: return "failed";
    }
    return "?";
  }
};

// Evaluates the smoothed control redox on its sample grid up to `elapsed`
// hours.  Ready fires at the first grid time where the redox exceeds
// high_redox, and is absorbing: later calls return the same result.  The
// growth class is fast when that crossing is at or before fast_cutoff_hours.
inline IncubationStatus assess_readiness(const LoessCurve& control_redox, double elapsed,
                                         const ReadinessParams& params = {}) {
  params.validate();
  if (elapsed < control_redox.t_min())
    throw std::invalid_argument("readiness: elapsed precedes first sample");

  const double horizon = std::min(elapsed, control_redox.t_max());
  double max_redox = 0.0;
  for (double t : control_redox.times()) {
    if (t > horizon + 1e-12) break;
    max_redox = std::max(max_redox, control_redox.eval(t, 0));
    if (max_redox > params.high_redox) {
      if (t > params.max_hours) break;  // panel already failed before the crossing
      const GrowthClass c =
          t <= params.fast_cutoff_hours ? GrowthClass::fast : GrowthClass::slow;
      return IncubationStatus::ready(t, c);
    }
  }
  if (elapsed > params.max_hours) return IncubationStatus::failed();
  if (max_redox <= params.low_redox) return IncubationStatus::insufficient();
  return IncubationStatus::keep_incubating();
}

}  // namespace micfit
