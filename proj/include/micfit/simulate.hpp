#pragma once
// Synthetic panel generator.  Stands in for instrument data: wells below the
// true MIC follow a logistic turbidity curve with a matching redox sigmoid,
// wells at or above it sit at noisy baseline, the drug-free control always
// grows, and a configurable fraction of panels contains one spurious growth
// well above the MIC.  Every panel is a pure function of (seed, panel_index).

#include "micfit/panel.hpp"
#include "micfit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace micfit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SimulationConfig {
  int n_panels = 100;
  std::vector<double> dilutions = DilutionGrid::fox().concentrations;
  double tick_minutes = 20.0;
  double max_hours = 16.0;
  Interval growth_rate_range{0.8, 1.6};      // logistic rate, 1/h
  Interval inflection_time_range{3.0, 7.0};  // hours
  Interval asymptote_range{1.0, 2.0};        // McFarland units
  double noise_sd = 0.02;
  double outlier_rate = 0.0;       // panels with one spurious growth well
  double offscale_mic_rate = 0.0;  // true MIC above the top dilution
  std::uint64_t seed = 1;

  DilutionGrid grid() const { return DilutionGrid{dilutions}; }

  void validate() const {
    if (n_panels < 0) throw std::invalid_argument("sim: n_panels must be >= 0");
    grid().validate();
    if (!(tick_minutes > 0.0)) throw std::invalid_argument("sim: tick_minutes must be > 0");
    if (!(max_hours > 0.0)) throw std::invalid_argument("sim: max_hours must be > 0");
    auto check_interval = [](const Interval& r, const char* what) {
      if (!(r.lo > 0.0) || r.lo > r.hi)
        throw std::invalid_argument(std::string("sim: bad range for ") + what);
    };
    check_interval(growth_rate_range, "growth_rate_range");
    check_interval(inflection_time_range, "inflection_time_range");
    check_interval(asymptote_range, "asymptote_range");
    if (noise_sd < 0.0) throw std::invalid_argument("sim: noise_sd must be >= 0");
    if (outlier_rate < 0.0 || outlier_rate > 1.0)
      throw std::invalid_argument("sim: outlier_rate must be in [0,1]");
    if (offscale_mic_rate < 0.0 || offscale_mic_rate > 1.0)
      throw std::invalid_argument("sim: offscale_mic_rate must be in [0,1]");
  }
};

// Generator-side truth for one panel, kept in the dataset manifest.
struct PanelTruth {
  int panel_id = 0;
  int mic_bin = 0;  // 1..J+1; J+1 = above the grid
  bool offscale = false;
  bool outlier = false;
  int outlier_well = 0;  // 1-based well index when outlier
  double growth_rate = 0.0;
  double inflection_time = 0.0;
  double asymptote = 0.0;
};

struct SimulatedDataset {
  SimulationConfig config;
  std::vector<RawPanel> panels;
  std::vector<PanelTruth> truths;
};

namespace detail {

inline double sigmoid(double t, double rate, double t0) {
  return 1.0 / (1.0 + std::exp(-rate * (t - t0)));
}

inline std::vector<double> sample_times(const SimulationConfig& cfg) {
  std::vector<double> times;
  const double tick_hours = cfg.tick_minutes / 60.0;
  for (int i = 0;; ++i) {
    const double t = i * tick_hours;
    if (t > cfg.max_hours + 1e-9) break;
    times.push_back(t);
  }
  return times;
}

}  // namespace detail

inline RawPanel simulate_panel(const SimulationConfig& cfg, int panel_index,
                               PanelTruth* truth_out = nullptr) {
  cfg.validate();
  if (panel_index < 0 || panel_index >= cfg.n_panels)
    throw std::invalid_argument("simulate_panel: panel_index out of range");

  Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(panel_index));
  const DilutionGrid grid = cfg.grid();
  const int J = grid.size();
  const std::vector<double> times = detail::sample_times(cfg);

  PanelTruth truth;
  truth.panel_id = panel_index;
  truth.offscale = rng.uniform() < cfg.offscale_mic_rate;
  truth.mic_bin =
      truth.offscale ? J + 1 : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(J))) + 1;
  truth.growth_rate = rng.uniform(cfg.growth_rate_range.lo, cfg.growth_rate_range.hi);
  truth.inflection_time =
      rng.uniform(cfg.inflection_time_range.lo, cfg.inflection_time_range.hi);
  truth.asymptote = rng.uniform(cfg.asymptote_range.lo, cfg.asymptote_range.hi);

  // Outlier: one well at or above the MIC shows growth anyway.  Draws happen
  // unconditionally to keep the stream layout fixed.
  const bool outlier_roll = rng.uniform() < cfg.outlier_rate;
  const std::uint64_t outlier_pick = rng.uniform_int(static_cast<std::uint64_t>(J));
  if (outlier_roll && truth.mic_bin <= J) {
    const int n_above = J - truth.mic_bin + 1;  // wells mic_bin..J don't grow
    truth.outlier = true;
    truth.outlier_well = truth.mic_bin + static_cast<int>(outlier_pick % n_above);
  }

  RawPanel panel;
  panel.id = panel_index;
  panel.reference_mic = truth.offscale
                            ? RefMic::above()
                            : RefMic::at(grid.concentrations[truth.mic_bin - 1]);

  auto make_series = [&](bool grows) -> Well {
    Well w;
    w.turbidity.time = times;
    w.redox.time = times;
    w.turbidity.value.reserve(times.size());
    w.redox.value.reserve(times.size());
    for (double t : times) {
      const double turb_mean =
          grows ? truth.asymptote * detail::sigmoid(t, truth.growth_rate, truth.inflection_time)
                : 0.0;
      const double redox_mean =
          grows ? detail::sigmoid(t, truth.growth_rate, truth.inflection_time) : 0.0;
      const double turb = turb_mean + cfg.noise_sd * rng.normal();
      const double redox = redox_mean + cfg.noise_sd * rng.normal();
      w.turbidity.value.push_back(std::clamp(turb, 0.0, kMaxTurbidity));
      w.redox.value.push_back(std::clamp(redox, 0.0, kMaxRedox));
    }
    return w;
  };

  panel.control = make_series(true);
  panel.control.dilution = 0.0;
  for (int j = 1; j <= J; ++j) {
    const bool grows = j < truth.mic_bin || (truth.outlier && j == truth.outlier_well);
    Well w = make_series(grows);
    w.dilution = grid.concentrations[j - 1];
    panel.wells.push_back(std::move(w));
  }

  if (truth_out) *truth_out = truth;
  return panel;
}

// Generates all panels; each uses an independent substream, so any subset is
// reproducible and generation order is immaterial.
inline SimulatedDataset simulate_dataset(const SimulationConfig& cfg) {
  cfg.validate();
  SimulatedDataset dataset;
  dataset.config = cfg;
  dataset.panels.reserve(cfg.n_panels);
  dataset.truths.reserve(cfg.n_panels);
  for (int i = 0; i < cfg.n_panels; ++i) {
    PanelTruth truth;
    dataset.panels.push_back(simulate_panel(cfg, i, &truth));
    dataset.truths.push_back(truth);
  }
  return dataset;
}

}  // namespace micfit
