#pragma once
// File formats for panel datasets and derived tables.
//
//   dataset CSV     panel_id,well,dilution,is_control,time_hours,turbidity,redox
//                   one row per sample; well 0 with is_control=1 is the
//                   growth-control well
//   reference CSV   panel_id,reference_mic   (the literal >MAX = above grid)
//   feature CSV     panel_id,well,dilution,time_to_result,label,<24 features>
//   prediction CSV  panel_id,rho_1..rho_{J+1},valid_sequence_prob,modal/DT
//                   indices and dilutions, losses, window probability, call
//
// Prediction files embed the dilution grid as a `# dilution_grid,...` comment
// so downstream evaluation is self-contained.

#include "micfit/csv.hpp"
#include "micfit/features.hpp"
#include "micfit/mic.hpp"
#include "micfit/panel.hpp"
#include "micfit/simulate.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace micfit {

constexpr const char* kAboveGridLiteral = ">MAX";

// ---------------------------------------------------------------------------
// dataset CSV

inline void write_dataset_csv(const std::string& path, const std::vector<RawPanel>& panels) {
  AtomicFileWriter out(path);
  out.write_line("panel_id,well,dilution,is_control,time_hours,turbidity,redox");
  auto emit_well = [&out](int panel_id, int well_index, bool is_control, const Well& w) {
    for (std::size_t i = 0; i < w.turbidity.time.size(); ++i) {
      out.write_row(panel_id, well_index, w.dilution, is_control ? 1 : 0, w.turbidity.time[i],
                    w.turbidity.value[i], w.redox.value[i]);
    }
  };
  for (const RawPanel& p : panels) {
    emit_well(p.id, 0, true, p.control);
    for (std::size_t j = 0; j < p.wells.size(); ++j)
      emit_well(p.id, static_cast<int>(j) + 1, false, p.wells[j]);
  }
  out.commit();
}

// Panels come back sorted by id with wells sorted by dilution; reference MICs
// are not part of this file (see the reference CSV).
inline std::vector<RawPanel> read_dataset_csv(const std::string& path) {
  CsvReader in(path);
  CsvRow row;
  if (!in.next(row)) throw CsvError(path, 1, "empty dataset file");
  in.expect_header(row, {"panel_id", "well", "dilution", "is_control", "time_hours",
                         "turbidity", "redox"});

  std::map<int, std::map<int, Well>> wells_by_panel;
  std::map<int, int> control_well_of;
  while (in.next(row)) {
    const int panel_id = static_cast<int>(in.parse_int(row, 0));
    const int well = static_cast<int>(in.parse_int(row, 1));
    const double dilution = in.parse_double(row, 2);
    const long is_control = in.parse_int(row, 3);
    const double t = in.parse_double(row, 4);
    const double turb = in.parse_double(row, 5);
    const double redox = in.parse_double(row, 6);
    if (is_control != 0 && is_control != 1)
      throw CsvError(path, row.line, "is_control must be 0 or 1");
    if (is_control == 1) {
      auto [it, inserted] = control_well_of.emplace(panel_id, well);
      if (!inserted && it->second != well)
        throw CsvError(path, row.line, "panel has two control wells");
    }
    Well& w = wells_by_panel[panel_id][well];
    w.dilution = dilution;
    w.turbidity.time.push_back(t);
    w.turbidity.value.push_back(turb);
    w.redox.time.push_back(t);
    w.redox.value.push_back(redox);
  }

  std::vector<RawPanel> panels;
  for (auto& [panel_id, wells] : wells_by_panel) {
    RawPanel p;
    p.id = panel_id;
    const auto control_it = control_well_of.find(panel_id);
    if (control_it == control_well_of.end())
      throw std::invalid_argument(path + ": panel " + std::to_string(panel_id) +
                                  " is missing a control well");
    for (auto& [well_index, well] : wells) {
      if (well_index == control_it->second) {
        p.control = std::move(well);
      } else {
        p.wells.push_back(std::move(well));
      }
    }
    std::sort(p.wells.begin(), p.wells.end(),
              [](const Well& a, const Well& b) { return a.dilution < b.dilution; });
    p.validate();
    panels.push_back(std::move(p));
  }
  return panels;
}

// ---------------------------------------------------------------------------
// reference CSV

inline void write_references_csv(const std::string& path, const std::vector<RawPanel>& panels) {
  AtomicFileWriter out(path);
  out.write_line("panel_id,reference_mic");
  for (const RawPanel& p : panels) {
    if (p.reference_mic.above_grid) {
      out.write_row(p.id, kAboveGridLiteral);
    } else {
      out.write_row(p.id, p.reference_mic.concentration);
    }
  }
  out.commit();
}

inline std::map<int, RefMic> read_references_csv(const std::string& path) {
  CsvReader in(path);
  CsvRow row;
  if (!in.next(row)) throw CsvError(path, 1, "empty reference file");
  in.expect_header(row, {"panel_id", "reference_mic"});
  std::map<int, RefMic> refs;
  while (in.next(row)) {
    const int panel_id = static_cast<int>(in.parse_int(row, 0));
    in.check_field(row, 1);
    RefMic ref;
    if (row.fields[1] == kAboveGridLiteral) {
      ref = RefMic::above();
    } else {
      ref = RefMic::at(in.parse_double(row, 1));
    }
    if (!refs.emplace(panel_id, ref).second)
      throw CsvError(path, row.line, "duplicate panel_id");
  }
  return refs;
}

// ---------------------------------------------------------------------------
// feature CSV

struct FeatureRow {
  int panel_id = 0;
  int well = 0;
  double dilution = 0.0;
  double time_to_result = 0.0;
  int label = 0;  // -1 when unknown
  FeatureVector features;
};

inline void write_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
  AtomicFileWriter out(path);
  std::string header = "panel_id,well,dilution,time_to_result,label";
  for (const char* name : feature_names()) header += std::string(",") + name;
  out.write_line(header);
  for (const FeatureRow& r : rows) {
    std::string line;
    line += std::to_string(r.panel_id);
    line += ',' + std::to_string(r.well);
    line += ',' + format_double(r.dilution);
    line += ',' + format_double(r.time_to_result);
    line += ',' + std::to_string(r.label);
    for (double v : r.features.values) line += ',' + format_double(v);
    out.write_line(line);
  }
  out.commit();
}

inline std::vector<FeatureRow> read_features_csv(const std::string& path) {
  CsvReader in(path);
  CsvRow row;
  if (!in.next(row)) throw CsvError(path, 1, "empty feature file");
  std::vector<std::string> header = {"panel_id", "well", "dilution", "time_to_result", "label"};
  for (const char* name : feature_names()) header.push_back(name);
  in.expect_header(row, header);
  std::vector<FeatureRow> rows;
  while (in.next(row)) {
    FeatureRow r;
    r.panel_id = static_cast<int>(in.parse_int(row, 0));
    r.well = static_cast<int>(in.parse_int(row, 1));
    r.dilution = in.parse_double(row, 2);
    r.time_to_result = in.parse_double(row, 3);
    r.label = static_cast<int>(in.parse_int(row, 4));
    for (int f = 0; f < kFeatureCount; ++f)
      r.features.values[f] = in.parse_double(row, 5 + f);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// prediction CSV

struct PredictionRow {
  int panel_id = 0;
  MicDistribution distribution;
  MicCall call;
};

inline std::string dilution_label(const DilutionGrid& grid, int bin_index) {
  if (bin_index == grid.size() + 1) return kAboveGridLiteral;
  return format_double(grid.concentrations[bin_index - 1]);
}

inline void write_predictions_csv(const std::string& path, const DilutionGrid& grid,
                                  const std::vector<PredictionRow>& rows) {
  AtomicFileWriter out(path);
  std::string grid_comment = "# dilution_grid";
  for (double c : grid.concentrations) grid_comment += ',' + format_double(c);
  out.write_line(grid_comment);
  std::string header = "panel_id";
  for (int j = 1; j <= grid.size() + 1; ++j) header += ",rho_" + std::to_string(j);
  header +=
      ",valid_sequence_prob,modal_index,modal_mic,dt_index,dt_mic,modal_loss,dt_loss,"
      "window_prob,decision";
  out.write_line(header);
  for (const PredictionRow& r : rows) {
    std::string line = std::to_string(r.panel_id);
    for (double rho : r.distribution.rho) line += ',' + format_double(rho);
    line += ',' + format_double(r.distribution.valid_sequence_prob);
    line += ',' + std::to_string(r.call.modal_index);
    line += ',' + dilution_label(grid, r.call.modal_index);
    line += ',' + std::to_string(r.call.dt_index);
    line += ',' + dilution_label(grid, r.call.dt_index);
    line += ',' + format_double(1.0 - r.call.modal_prob);
    line += ',' + format_double(r.call.dt_expected_loss);
    line += ',' + format_double(r.call.window_prob);
    line += ',';
    line += (r.call.decision == CallDecision::call ? "call" : "delay");
    out.write_line(line);
  }
  out.commit();
}

struct PredictionFile {
  DilutionGrid grid;
  std::vector<PredictionRow> rows;
};

inline PredictionFile read_predictions_csv(const std::string& path) {
  CsvReader in(path);
  CsvRow row;
  if (!in.next(row)) throw CsvError(path, 1, "empty prediction file");
  PredictionFile file;
  for (const std::string& comment : in.comments()) {
    if (comment.rfind("# dilution_grid,", 0) == 0) {
      std::size_t start = std::string("# dilution_grid,").size();
      while (start <= comment.size()) {
        const std::size_t comma = comment.find(',', start);
        const std::string field = comment.substr(start, comma - start);
        try {
          file.grid.concentrations.push_back(std::stod(field));
        } catch (const std::exception&) {
          throw CsvError(path, 1, "bad dilution in grid comment: '" + field + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  }
  if (file.grid.concentrations.empty())
    throw CsvError(path, 1, "missing '# dilution_grid,...' comment");
  const int J = file.grid.size();
  // header sanity only; widths are validated per row
  in.check_field(row, static_cast<std::size_t>(J) + 1);

  while (in.next(row)) {
    PredictionRow r;
    r.panel_id = static_cast<int>(in.parse_int(row, 0));
    for (int j = 0; j <= J; ++j)
      r.distribution.rho.push_back(in.parse_double(row, 1 + static_cast<std::size_t>(j)));
    std::size_t f = static_cast<std::size_t>(J) + 2;
    r.distribution.dilutions = file.grid.concentrations;
    r.distribution.valid_sequence_prob = in.parse_double(row, f++);
    r.call.modal_index = static_cast<int>(in.parse_int(row, f++));
    f++;  // modal_mic label
    r.call.dt_index = static_cast<int>(in.parse_int(row, f++));
    f++;  // dt_mic label
    r.call.modal_prob = 1.0 - in.parse_double(row, f++);
    r.call.dt_expected_loss = in.parse_double(row, f++);
    r.call.window_prob = in.parse_double(row, f++);
    in.check_field(row, f);
    r.call.decision = row.fields[f] == "call" ? CallDecision::call : CallDecision::delay;
    file.rows.push_back(std::move(r));
  }
  return file;
}

// ---------------------------------------------------------------------------
// simulation manifest JSON

inline nlohmann::ordered_json manifest_json(const SimulatedDataset& dataset) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  const SimulationConfig& c = dataset.config;
  doc["config"] = {{"n_panels", c.n_panels},
                   {"dilutions", c.dilutions},
                   {"tick_minutes", c.tick_minutes},
                   {"max_hours", c.max_hours},
                   {"growth_rate_range", {c.growth_rate_range.lo, c.growth_rate_range.hi}},
                   {"inflection_time_range",
                    {c.inflection_time_range.lo, c.inflection_time_range.hi}},
                   {"asymptote_range", {c.asymptote_range.lo, c.asymptote_range.hi}},
                   {"noise_sd", c.noise_sd},
                   {"outlier_rate", c.outlier_rate},
                   {"offscale_mic_rate", c.offscale_mic_rate},
                   {"seed", c.seed}};
  doc["panels"] = nlohmann::ordered_json::array();
  const DilutionGrid grid = c.grid();
  for (const PanelTruth& t : dataset.truths) {
    nlohmann::ordered_json p;
    p["panel_id"] = t.panel_id;
    p["mic_bin"] = t.mic_bin;
    if (t.mic_bin == grid.size() + 1) {
      p["reference_mic"] = kAboveGridLiteral;
    } else {
      p["reference_mic"] = grid.concentrations[t.mic_bin - 1];
    }
    p["offscale"] = t.offscale;
    p["outlier"] = t.outlier;
    p["outlier_well"] = t.outlier_well;
    p["growth_rate"] = t.growth_rate;
    p["inflection_time"] = t.inflection_time;
    p["asymptote"] = t.asymptote;
    doc["panels"].push_back(std::move(p));
  }
  return doc;
}

}  // namespace micfit
