// micfit command line: simulate panels, extract features, train the growth
// model, predict MIC distributions, and evaluate agreement against reference
// MICs.  Exit codes: 0 success, 2 input error, 3 numerical failure.

#include "micfit/config.hpp"
#include "micfit/dataset_io.hpp"
#include "micfit/model_io.hpp"
#include "micfit/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using namespace micfit;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

PipelineConfig load_pipeline_config(const CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  if (args.seed) cfg.sim.seed = *args.seed;
  return cfg;
}

void require_distinct_output(const std::string& out,
                             std::initializer_list<std::string> inputs) {
  namespace fs = std::filesystem;
  for (const std::string& in : inputs) {
    if (in.empty()) continue;
    std::error_code ec;
    if (fs::weakly_canonical(out, ec) == fs::weakly_canonical(in, ec))
      throw std::invalid_argument("output path '" + out + "' would overwrite an input");
  }
}

void write_text_atomic(const std::string& path, const std::string& text) {
  AtomicFileWriter out(path);
  if (!text.empty() && text.back() == '\n') {
    out.write_line(text.substr(0, text.size() - 1));
  } else {
    out.write_line(text);
  }
  out.commit();
}

int cmd_simulate(const CommonArgs& common, const std::string& out_dir) {
  PipelineConfig cfg = load_pipeline_config(common);
  std::filesystem::create_directories(out_dir);
  const SimulatedDataset dataset = simulate_dataset(cfg.sim);
  write_dataset_csv(out_dir + "/dataset.csv", dataset.panels);
  write_references_csv(out_dir + "/references.csv", dataset.panels);
  write_text_atomic(out_dir + "/manifest.json", canonical_json(manifest_json(dataset)));
  std::cout << "simulate: wrote " << dataset.panels.size() << " panels to " << out_dir << "\n";
  return 0;
}

int cmd_extract(const CommonArgs& common, const std::string& data_path,
                const std::string& refs_path, const std::string& out_path) {
  const PipelineConfig cfg = load_pipeline_config(common);
  require_distinct_output(out_path, {data_path, refs_path});
  const std::vector<RawPanel> panels = read_dataset_csv(data_path);
  std::map<int, RefMic> refs;
  if (!refs_path.empty()) refs = read_references_csv(refs_path);
  std::vector<SkippedPanel> skipped;
  const std::vector<FeatureRow> rows = extract_dataset(panels, refs, cfg, &skipped);
  write_features_csv(out_path, rows);
  std::cout << "extract: " << rows.size() << " well rows from " << panels.size()
            << " panels";
  if (!skipped.empty()) std::cout << " (" << skipped.size() << " skipped)";
  std::cout << "\n";
  for (const SkippedPanel& s : skipped)
    std::cerr << "extract: skipped panel " << s.panel_id << ": " << s.reason << "\n";
  return 0;
}

void write_search_report(const std::string& path, const std::vector<ModelScore>& stage1,
                         const std::vector<ModelScore>& stage2) {
  AtomicFileWriter out(path);
  out.write_line("stage,rank,terms,loglik,d,bic_score,posterior");
  auto emit = [&out](const char* stage, const std::vector<ModelScore>& scores) {
    int rank = 1;
    for (const ModelScore& s : scores) {
      std::string terms;
      for (const PolyTerms& t : s.terms) {
        if (!terms.empty()) terms += '+';
        terms += feature_name(static_cast<Feature>(t.column));
        if (t.max_degree > 1) terms += "^" + std::to_string(t.max_degree);
      }
      if (terms.empty()) terms = "(intercept)";
      out.write_row(stage, rank++, terms, s.loglik, s.d, s.bic_score, s.posterior);
    }
  };
  emit("linear", stage1);
  emit("expanded", stage2);
  out.commit();
}

int cmd_train(const CommonArgs& common, const std::string& features_path,
              const std::string& grid_csv, const std::string& out_path,
              const std::string& report_path, double train_fraction,
              std::optional<std::uint64_t> split_seed, const std::string& split_out) {
  PipelineConfig cfg = load_pipeline_config(common);
  require_distinct_output(out_path, {features_path});
  if (!report_path.empty()) require_distinct_output(report_path, {features_path, out_path});
  if (train_fraction > 0.0) cfg.split.fraction = train_fraction;
  if (split_seed) cfg.split.seed = *split_seed;

  std::vector<FeatureRow> rows = read_features_csv(features_path);
  if (rows.empty()) throw std::invalid_argument("train: no feature rows");

  DilutionGrid grid;
  if (!grid_csv.empty()) {
    std::stringstream ss(grid_csv);
    std::string field;
    while (std::getline(ss, field, ',')) grid.concentrations.push_back(std::stod(field));
  } else {
    std::set<double> dilutions;
    for (const FeatureRow& r : rows) dilutions.insert(r.dilution);
    grid.concentrations.assign(dilutions.begin(), dilutions.end());
  }
  grid.validate();

  // Panel-level split; fraction 1 disables the hold-out.
  std::vector<int> panel_ids;
  for (const FeatureRow& r : rows) {
    if (panel_ids.empty() || panel_ids.back() != r.panel_id) panel_ids.push_back(r.panel_id);
  }
  std::sort(panel_ids.begin(), panel_ids.end());
  panel_ids.erase(std::unique(panel_ids.begin(), panel_ids.end()), panel_ids.end());

  std::set<int> train_ids(panel_ids.begin(), panel_ids.end());
  std::vector<int> validation_ids;
  if (cfg.split.fraction < 1.0) {
    const SplitIndices split =
        split_panels(panel_ids.size(), cfg.split.fraction, cfg.split.seed);
    train_ids.clear();
    for (std::size_t i : split.train) train_ids.insert(panel_ids[i]);
    for (std::size_t i : split.validation) validation_ids.push_back(panel_ids[i]);
  }

  std::vector<FeatureRow> train_rows;
  for (const FeatureRow& r : rows)
    if (train_ids.count(r.panel_id)) train_rows.push_back(r);

  const TwoStageResult result = train_growth_model(train_rows, cfg.selection);
  save_model(out_path, ModelFile{grid, result.model});
  if (!report_path.empty()) write_search_report(report_path, result.stage1, result.stage2);
  if (!split_out.empty()) {
    nlohmann::ordered_json doc;
    doc["train"] = std::vector<int>(train_ids.begin(), train_ids.end());
    doc["validation"] = validation_ids;
    write_text_atomic(split_out, canonical_json(doc));
  }

  std::string terms = "(intercept)";
  for (const PolyTerms& t : result.model.terms) {
    if (terms == "(intercept)") terms.clear();
    else terms += '+';
    terms += feature_name(static_cast<Feature>(t.column));
    if (t.max_degree > 1) terms += "^" + std::to_string(t.max_degree);
  }
  std::cout << "train: " << train_rows.size() << " wells from " << train_ids.size()
            << " panels; selected " << terms << " (loglik "
            << format_double(result.model.fit.loglik) << ", posterior "
            << format_double(result.model.score.posterior) << ")\n";
  return 0;
}

int cmd_predict(const CommonArgs& common, const std::string& model_path,
                const std::string& data_path, const std::string& out_path,
                const std::string& panels_path) {
  const PipelineConfig cfg = load_pipeline_config(common);
  require_distinct_output(out_path, {model_path, data_path, panels_path});
  const ModelFile model = load_model(model_path);
  const std::vector<RawPanel> panels = read_dataset_csv(data_path);

  std::optional<std::set<int>> keep;
  if (!panels_path.empty()) {
    std::ifstream in(panels_path);
    if (!in) throw std::runtime_error("cannot open " + panels_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(panels_path + ": " + e.what());
    }
    const auto& list = doc.is_object() ? doc.at("validation") : doc;
    keep = std::set<int>(list.begin(), list.end());
  }

  std::vector<PredictionRow> rows;
  std::vector<SkippedPanel> skipped;
  for (const RawPanel& p : panels) {
    if (keep && !keep->count(p.id)) continue;
    std::string reason;
    const auto feats = extract_panel(p, cfg, nullptr, &reason);
    if (!feats) {
      skipped.push_back({p.id, reason});
      continue;
    }
    rows.push_back(predict_panel(model.model, model.grid, *feats, cfg.loss,
                                 cfg.call_threshold));
  }
  write_predictions_csv(out_path, model.grid, rows);
  std::cout << "predict: " << rows.size() << " panels";
  if (!skipped.empty()) std::cout << " (" << skipped.size() << " skipped)";
  std::cout << "\n";
  for (const SkippedPanel& s : skipped)
    std::cerr << "predict: skipped panel " << s.panel_id << ": " << s.reason << "\n";
  return 0;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void write_agreement_csv(const std::string& path, const AgreementReport& modal,
                         const AgreementReport& dt) {
  AtomicFileWriter out(path);
  out.write_line("estimate,n,under_count,within_count,over_count,under_pct,within_pct,over_pct");
  out.write_row("modal", modal.n, modal.under_count, modal.within_count, modal.over_count,
                pct(modal.under_pct), pct(modal.within_pct), pct(modal.over_pct));
  out.write_row("decision_theoretic", dt.n, dt.under_count, dt.within_count, dt.over_count,
                pct(dt.under_pct), pct(dt.within_pct), pct(dt.over_pct));
  out.commit();
}

void write_categorical_csv(const std::string& path, const CategoricalReport& modal,
                           const CategoricalReport& dt) {
  AtomicFileWriter out(path);
  out.write_line(
      "estimate,n,n_susceptible,n_intermediate,n_resistant,agreement_pct,"
      "very_major_count,very_major_rate,major_count,major_rate,minor_count");
  auto emit = [&out](const char* name, const CategoricalReport& r) {
    out.write_row(name, r.n, r.n_susceptible, r.n_intermediate, r.n_resistant,
                  pct(r.agreement_pct), r.very_major_count, pct(r.very_major_rate),
                  r.major_count, pct(r.major_rate), r.minor_count);
  };
  emit("modal", modal);
  emit("decision_theoretic", dt);
  out.commit();
}

void write_residuals_csv(const std::string& path, const std::vector<int>& panel_ids,
                         const ResidualTable& table) {
  AtomicFileWriter out(path);
  out.write_line("panel_id,modal_residual,dt_residual,modal_loss,dt_loss,modal_prob_ge_half");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const ResidualRow& r = table.rows[i];
    const bool confident = r.modal_loss <= 0.5;
    out.write_row(panel_ids[i], r.modal_residual, r.dt_residual, r.modal_loss, r.dt_loss,
                  confident ? 1 : 0);
  }
  out.commit();
}

std::string agreement_summary(const std::string& title, const AgreementReport& modal,
                              const AgreementReport& dt) {
  std::string s;
  s += title + " (n = " + std::to_string(modal.n) + ")\n";
  s += "  Estimate               EST-REF < -1   -1 <= EST-REF <= 1   EST-REF > 1\n";
  auto row = [](const std::string& name, const AgreementReport& r) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-22s %12.2f %20.2f %13.2f\n", name.c_str(),
                  r.under_pct, r.within_pct, r.over_pct);
    return std::string(buf);
  };
  s += row("Modal MIC", modal);
  s += row("Decision theoretic MIC", dt);
  return s;
}

int cmd_evaluate(const CommonArgs& common, const std::string& predictions_path,
                 const std::string& refs_path, const std::string& out_dir) {
  const PipelineConfig cfg = load_pipeline_config(common);
  const PredictionFile predictions = read_predictions_csv(predictions_path);
  const std::map<int, RefMic> refs = read_references_csv(refs_path);
  std::filesystem::create_directories(out_dir);

  std::vector<IndexCall> modal_calls, dt_calls;
  std::vector<MicCall> calls;
  std::vector<MicDistribution> dists;
  std::vector<int> ref_bins, panel_ids;
  for (const PredictionRow& row : predictions.rows) {
    const auto it = refs.find(row.panel_id);
    if (it == refs.end())
      throw std::invalid_argument("evaluate: no reference MIC for panel " +
                                  std::to_string(row.panel_id));
    const int ref_bin = it->second.bin_index(predictions.grid);
    modal_calls.push_back({row.call.modal_index, ref_bin});
    dt_calls.push_back({row.call.dt_index, ref_bin});
    calls.push_back(row.call);
    dists.push_back(row.distribution);
    ref_bins.push_back(ref_bin);
    panel_ids.push_back(row.panel_id);
  }
  if (calls.empty()) throw std::invalid_argument("evaluate: no predictions to score");

  const AgreementReport modal_ea = essential_agreement(modal_calls);
  const AgreementReport dt_ea = essential_agreement(dt_calls);
  const CategoricalReport modal_cat =
      categorical_agreement(modal_calls, predictions.grid, cfg.breakpoints);
  const CategoricalReport dt_cat =
      categorical_agreement(dt_calls, predictions.grid, cfg.breakpoints);
  const ResidualTable residuals = residual_table(calls, dists, ref_bins, cfg.loss);

  write_agreement_csv(out_dir + "/essential_agreement.csv", modal_ea, dt_ea);
  write_categorical_csv(out_dir + "/categorical_agreement.csv", modal_cat, dt_cat);
  write_residuals_csv(out_dir + "/residuals.csv", panel_ids, residuals);

  std::string summary = agreement_summary("Essential agreement, %", modal_ea, dt_ea);
  summary += "\nCategorical agreement (S <= " + format_double(cfg.breakpoints.susceptible_max) +
             ", R >= " + format_double(cfg.breakpoints.resistant_min) + ")\n";
  auto cat_row = [](const std::string& name, const CategoricalReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "  %-22s agreement %6.2f%%  very major %5.2f%%  major %5.2f%%  minor %d\n",
                  name.c_str(), r.agreement_pct, r.very_major_rate, r.major_rate,
                  r.minor_count);
    return std::string(buf);
  };
  summary += cat_row("Modal MIC", modal_cat);
  summary += cat_row("Decision theoretic MIC", dt_cat);
  {
    std::vector<IndexCall> modal_conf, dt_conf;
    for (std::size_t i = 0; i < calls.size(); ++i) {
      if (calls[i].modal_prob >= 0.5) {
        modal_conf.push_back(modal_calls[i]);
        dt_conf.push_back(dt_calls[i]);
      }
    }
    if (!modal_conf.empty()) {
      summary += "\n" + agreement_summary("Essential agreement, P(modal MIC) >= 0.5 subset, %",
                                          essential_agreement(modal_conf),
                                          essential_agreement(dt_conf));
    }
  }
  write_text_atomic(out_dir + "/summary.txt", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "micfit: MIC estimation from microbial growth curves\n"
      "Pipeline: simulate -> extract -> train -> predict -> evaluate.\n"
      "Defaults follow the published constants: redox thresholds 0.07/0.2,\n"
      "16 h incubation horizon, loss weights 5/1/0, 65% training split."};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "pipeline configuration JSON");
  app.add_option("--seed", common.seed, "override the simulation seed");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic panel dataset");
  std::string out_dir = "out";
  sim->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* extract = app.add_subcommand("extract", "extract growth-curve features");
  std::string data_path, refs_path, features_out = "features.csv";
  extract->add_option("--data", data_path, "dataset CSV")->required();
  extract->add_option("--refs", refs_path, "reference MIC CSV (enables labels)");
  extract->add_option("--out", features_out, "feature CSV output")->capture_default_str();

  auto* train = app.add_subcommand("train", "select and fit the growth model");
  std::string features_path, model_out = "model.json", report_out, grid_csv, split_out;
  double train_fraction = 0.0;
  std::optional<std::uint64_t> split_seed;
  train->add_option("--features", features_path, "feature CSV")->required();
  train->add_option("--out", model_out, "model JSON output")->capture_default_str();
  train->add_option("--report", report_out, "model search report CSV");
  train->add_option("--grid", grid_csv, "dilution grid, comma separated (default: inferred)");
  train->add_option("--train-fraction", train_fraction,
                    "panel-level training fraction (default from config, 0.65; 1 = all)");
  train->add_option("--split-seed", split_seed, "split seed (default from config)");
  train->add_option("--split-out", split_out, "write train/validation panel ids as JSON");

  auto* predict = app.add_subcommand("predict", "MIC distributions and calls for a dataset");
  std::string model_path, predict_data, predictions_out = "predictions.csv", panels_path;
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--data", predict_data, "dataset CSV")->required();
  predict->add_option("--out", predictions_out, "prediction CSV output")->capture_default_str();
  predict->add_option("--panels", panels_path,
                      "JSON list of panel ids (or train --split-out file) to predict");

  auto* evaluate = app.add_subcommand("evaluate", "agreement reports against reference MICs");
  std::string eval_predictions, eval_refs, eval_out = "reports";
  evaluate->add_option("--predictions", eval_predictions, "prediction CSV")->required();
  evaluate->add_option("--refs", eval_refs, "reference MIC CSV")->required();
  evaluate->add_option("--out", eval_out, "report directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(common, out_dir);
    if (extract->parsed()) return cmd_extract(common, data_path, refs_path, features_out);
    if (train->parsed())
      return cmd_train(common, features_path, grid_csv, model_out, report_out, train_fraction,
                       split_seed, split_out);
    if (predict->parsed())
      return cmd_predict(common, model_path, predict_data, predictions_out, panels_path);
    if (evaluate->parsed()) return cmd_evaluate(common, eval_predictions, eval_refs, eval_out);
  } catch (const micfit::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
