#pragma once
// End-to-end wiring shared by the CLI and the integration tests: smooth each
// well, freeze the time-to-result from the control redox, extract features
// and labels, train the two-stage growth model, and turn per-well growth
// probabilities into MIC calls.

#include "micfit/config.hpp"
#include "micfit/dataset_io.hpp"
#include "micfit/evaluate.hpp"
#include "micfit/features.hpp"
#include "micfit/mic.hpp"
#include "micfit/model_io.hpp"
#include "micfit/model_select.hpp"
#include "micfit/panel.hpp"
#include "micfit/readiness.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace micfit {

struct PanelFeatures {
  int panel_id = 0;
  double time_to_result = 0.0;
  GrowthClass growth_class = GrowthClass::slow;
  std::vector<FeatureRow> wells;  // sorted by dilution; label -1 if no reference
};

struct SkippedPanel {
  int panel_id = 0;
  std::string reason;
};

// Smooths all curves, runs the incubation state machine on the control
// redox, and extracts features at the time-to-result.  Panels that never
// become ready are reported via `skipped`.
inline std::optional<PanelFeatures> extract_panel(const RawPanel& panel,
                                                  const PipelineConfig& cfg,
                                                  const RefMic* reference = nullptr,
                                                  std::string* skip_reason = nullptr) {
  panel.validate();
  const double span = cfg.smoothing_span;
  const LoessCurve control_turb(panel.control.turbidity.time, panel.control.turbidity.value,
                                span);
  const LoessCurve control_redox(panel.control.redox.time, panel.control.redox.value, span);

  const double elapsed = control_redox.t_max();
  const IncubationStatus status = assess_readiness(control_redox, elapsed, cfg.readiness);
  if (!status.is_ready()) {
    if (skip_reason)
      *skip_reason = std::string("control well not ready (") + status.name() + ")";
    return std::nullopt;
  }

  PanelFeatures out;
  out.panel_id = panel.id;
  out.time_to_result = status.time_to_result;
  out.growth_class = status.growth_class;
  for (std::size_t j = 0; j < panel.wells.size(); ++j) {
    const Well& w = panel.wells[j];
    const LoessCurve test_turb(w.turbidity.time, w.turbidity.value, span);
    const LoessCurve test_redox(w.redox.time, w.redox.value, span);
    FeatureRow row;
    row.panel_id = panel.id;
    row.well = static_cast<int>(j) + 1;
    row.dilution = w.dilution;
    row.time_to_result = status.time_to_result;
    row.features = extract_features(test_turb, test_redox, control_turb, control_redox,
                                    status.time_to_result, cfg.features);
    row.label = reference ? label_growth(w.dilution, *reference) : -1;
    out.wells.push_back(std::move(row));
  }
  return out;
}

inline std::vector<FeatureRow> extract_dataset(const std::vector<RawPanel>& panels,
                                               const std::map<int, RefMic>& references,
                                               const PipelineConfig& cfg,
                                               std::vector<SkippedPanel>* skipped = nullptr) {
  std::vector<FeatureRow> rows;
  for (const RawPanel& p : panels) {
    const auto ref_it = references.find(p.id);
    const RefMic* ref = ref_it == references.end() ? nullptr : &ref_it->second;
    std::string reason;
    const auto feats = extract_panel(p, cfg, ref, &reason);
    if (!feats) {
      if (skipped) skipped->push_back({p.id, reason});
      continue;
    }
    for (const FeatureRow& r : feats->wells) rows.push_back(r);
  }
  return rows;
}

// Feature rows -> (raw design matrix over the 24 features, labels).
inline void feature_matrix(const std::vector<FeatureRow>& rows, Eigen::MatrixXd& X,
                           Eigen::VectorXd& y) {
  X.resize(static_cast<Eigen::Index>(rows.size()), kFeatureCount);
  y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int f = 0; f < kFeatureCount; ++f)
      X(static_cast<Eigen::Index>(i), f) = rows[i].features.values[f];
    y(static_cast<Eigen::Index>(i)) = rows[i].label;
  }
}

// Two-stage selection over all 24 features on labeled rows.
inline TwoStageResult train_growth_model(const std::vector<FeatureRow>& rows,
                                         const SearchOptions& opt) {
  for (const FeatureRow& r : rows) {
    if (r.label != 0 && r.label != 1)
      throw std::invalid_argument("train: every feature row needs a 0/1 label");
  }
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  feature_matrix(rows, X, y);
  std::vector<int> candidates(kFeatureCount);
  for (int f = 0; f < kFeatureCount; ++f) candidates[f] = f;
  return two_stage_select(X, y, candidates, opt);
}

// Growth probabilities for one panel's wells (sorted by dilution), combined
// into the MIC posterior and both estimates.
inline PredictionRow predict_panel(const GrowthModel& model, const DilutionGrid& grid,
                                   const PanelFeatures& feats, const LossWeights& loss,
                                   double call_threshold) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(feats.wells.size()), kFeatureCount);
  for (std::size_t i = 0; i < feats.wells.size(); ++i)
    for (int f = 0; f < kFeatureCount; ++f)
      X(static_cast<Eigen::Index>(i), f) = feats.wells[i].features.values[f];
  const Eigen::VectorXd pi = model.predict(X);

  PredictionRow row;
  row.panel_id = feats.panel_id;
  row.distribution = mic_distribution(std::vector<double>(pi.data(), pi.data() + pi.size()),
                                      grid.concentrations);
  row.call = make_mic_call(row.distribution, loss, call_threshold);
  return row;
}

}  // namespace micfit
