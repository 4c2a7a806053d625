#include "micfit/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace micfit;

namespace {

SimulationConfig quiet_config(int n_panels = 4) {
  SimulationConfig cfg;
  cfg.n_panels = n_panels;
  cfg.noise_sd = 0.0;
  cfg.outlier_rate = 0.0;
  cfg.offscale_mic_rate = 0.0;
  cfg.seed = 99;
  return cfg;
}

bool series_equal(const Series& a, const Series& b) {
  return a.time == b.time && a.value == b.value;
}

}  // namespace

TEST_CASE("config validation", "[sim]") {
  SimulationConfig cfg = quiet_config();
  cfg.dilutions = {1.0, 3.0};  // not two-fold
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quiet_config();
  cfg.tick_minutes = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quiet_config();
  cfg.growth_rate_range = {2.0, 1.0};
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quiet_config();
  cfg.outlier_rate = 1.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quiet_config();
  REQUIRE_THROWS_AS(simulate_panel(cfg, 4), std::invalid_argument);
}

TEST_CASE("noiseless wells follow the configured logistic or stay at baseline",
          "[sim]") {
  SimulationConfig cfg = quiet_config(64);
  PanelTruth truth;
  // find a panel whose MIC is an interior bin so both branches exist
  int index = 0;
  RawPanel panel;
  for (; index < cfg.n_panels; ++index) {
    panel = simulate_panel(cfg, index, &truth);
    if (truth.mic_bin > 1 && truth.mic_bin <= cfg.grid().size()) break;
  }
  REQUIRE(truth.mic_bin > 1);

  const Well& growing = panel.wells[0];  // lowest dilution, below the MIC
  for (std::size_t i = 0; i < growing.turbidity.time.size(); ++i) {
    const double t = growing.turbidity.time[i];
    const double expect = std::clamp(
        truth.asymptote / (1.0 + std::exp(-truth.growth_rate * (t - truth.inflection_time))),
        0.0, kMaxTurbidity);
    REQUIRE(growing.turbidity.value[i] == Catch::Approx(expect).margin(1e-12));
  }
  // approaches the asymptote by the end of the horizon
  REQUIRE(growing.turbidity.value.back() >
          0.9 * std::min(truth.asymptote, kMaxTurbidity));

  const Well& flat = panel.wells.back();  // top dilution, at or above the MIC
  for (double v : flat.turbidity.value) REQUIRE(v == 0.0);
  for (double v : flat.redox.value) REQUIRE(v == 0.0);

  // control always grows
  REQUIRE(panel.control.redox.value.back() > 0.9);
}

TEST_CASE("same (seed, panel_index) reproduces the panel bit for bit", "[sim]") {
  SimulationConfig cfg = quiet_config(8);
  cfg.noise_sd = 0.05;
  cfg.outlier_rate = 0.3;
  cfg.offscale_mic_rate = 0.2;
  const RawPanel a = simulate_panel(cfg, 3);
  const RawPanel b = simulate_panel(cfg, 3);
  REQUIRE(a.reference_mic == b.reference_mic);
  REQUIRE(series_equal(a.control.turbidity, b.control.turbidity));
  REQUIRE(a.wells.size() == b.wells.size());
  for (std::size_t j = 0; j < a.wells.size(); ++j) {
    REQUIRE(a.wells[j].dilution == b.wells[j].dilution);
    REQUIRE(series_equal(a.wells[j].turbidity, b.wells[j].turbidity));
    REQUIRE(series_equal(a.wells[j].redox, b.wells[j].redox));
  }

  // panels are independent substreams: generating a subset matches the batch
  const SimulatedDataset dataset = simulate_dataset(cfg);
  REQUIRE(series_equal(dataset.panels[3].control.redox, a.control.redox));
}

TEST_CASE("signals stay inside their ranges at any noise level", "[sim][property]") {
  SimulationConfig cfg = quiet_config(6);
  cfg.noise_sd = 1.5;  // absurd noise; clipping must hold
  const SimulatedDataset dataset = simulate_dataset(cfg);
  for (const RawPanel& p : dataset.panels) {
    p.validate();  // includes the range checks
    for (const Well& w : p.wells) {
      for (double v : w.turbidity.value) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= kMaxTurbidity);
      }
      for (double v : w.redox.value) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= kMaxRedox);
      }
    }
  }
}

TEST_CASE("noiseless growth pattern is exactly the valid sequence", "[sim][property]") {
  SimulationConfig cfg = quiet_config(32);
  const SimulatedDataset dataset = simulate_dataset(cfg);
  for (int i = 0; i < cfg.n_panels; ++i) {
    const RawPanel& p = dataset.panels[i];
    const PanelTruth& truth = dataset.truths[i];
    for (std::size_t j = 0; j < p.wells.size(); ++j) {
      const double max_turb =
          *std::max_element(p.wells[j].turbidity.value.begin(), p.wells[j].turbidity.value.end());
      const bool grew = max_turb > 0.0;
      const bool below_mic = static_cast<int>(j) + 1 < truth.mic_bin;
      REQUIRE(grew == below_mic);
    }
  }
}

TEST_CASE("empty dataset and rate-zero cases", "[sim]") {
  SimulationConfig cfg = quiet_config(0);
  const SimulatedDataset empty = simulate_dataset(cfg);
  REQUIRE(empty.panels.empty());
  REQUIRE(empty.truths.empty());
  REQUIRE(empty.config.n_panels == 0);

  cfg = quiet_config(100);
  cfg.offscale_mic_rate = 0.0;
  const SimulatedDataset dataset = simulate_dataset(cfg);
  for (const PanelTruth& t : dataset.truths) {
    REQUIRE_FALSE(t.offscale);
    REQUIRE(t.mic_bin >= 1);
    REQUIRE(t.mic_bin <= cfg.grid().size());
  }
}

TEST_CASE("outlier flags occur at the configured rate", "[sim]") {
  SimulationConfig cfg = quiet_config(10000);
  cfg.outlier_rate = 0.02;
  cfg.seed = 1234;
  const SimulatedDataset dataset = simulate_dataset(cfg);
  int outliers = 0;
  for (int i = 0; i < cfg.n_panels; ++i) {
    const PanelTruth& t = dataset.truths[i];
    if (t.outlier) {
      ++outliers;
      REQUIRE(t.outlier_well >= t.mic_bin);
      REQUIRE(t.outlier_well <= cfg.grid().size());
      // the flagged well really does grow
      const Well& w = dataset.panels[i].wells[t.outlier_well - 1];
      REQUIRE(*std::max_element(w.turbidity.value.begin(), w.turbidity.value.end()) > 0.5);
    }
  }
  const double rate = static_cast<double>(outliers) / cfg.n_panels;
  REQUIRE(rate > 0.01);
  REQUIRE(rate < 0.03);
}

TEST_CASE("off-scale panels grow in every well", "[sim]") {
  SimulationConfig cfg = quiet_config(50);
  cfg.offscale_mic_rate = 1.0;
  const SimulatedDataset dataset = simulate_dataset(cfg);
  for (int i = 0; i < cfg.n_panels; ++i) {
    REQUIRE(dataset.truths[i].offscale);
    REQUIRE(dataset.panels[i].reference_mic.above_grid);
    for (const Well& w : dataset.panels[i].wells) {
      REQUIRE(*std::max_element(w.turbidity.value.begin(), w.turbidity.value.end()) > 0.5);
    }
  }
}
