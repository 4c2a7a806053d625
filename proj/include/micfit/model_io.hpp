#pragma once
// Versioned model persistence.  The JSON layout is canonical: keys in fixed
// order and doubles printed with %.17g, so load followed by save reproduces
// the file byte for byte.

#include "micfit/csv.hpp"  // format_double, AtomicFileWriter
#include "micfit/features.hpp"
#include "micfit/model_select.hpp"
#include "micfit/panel.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace micfit {

constexpr int kModelSchemaVersion = 1;

struct ModelFile {
  DilutionGrid grid;
  GrowthModel model;
};

namespace detail {

inline void canonical_dump(const nlohmann::ordered_json& j, std::string& out, int indent) {
  using json = nlohmann::ordered_json;
  const std::string pad(indent, ' ');
  const std::string pad_in(indent + 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + json(it.key()).dump() + ": ";
        canonical_dump(it.value(), out, indent + 2);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        canonical_dump(item, out, indent + 2);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string canonical_json(const nlohmann::ordered_json& j) {
  std::string out;
  detail::canonical_dump(j, out, 0);
  out += '\n';
  return out;
}

inline nlohmann::ordered_json model_to_json(const ModelFile& file) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["dilution_grid"] = file.grid.concentrations;

  doc["term_list"] = nlohmann::ordered_json::array();
  for (const PolyTerms& t : file.model.terms) {
    doc["term_list"].push_back(
        {{"feature", feature_name(static_cast<Feature>(t.column))}, {"degree", t.max_degree}});
  }

  doc["basis_parameters"] = nlohmann::ordered_json::array();
  for (const PolyBasis::Block& b : file.model.basis.blocks()) {
    nlohmann::ordered_json jb;
    jb["feature"] = feature_name(static_cast<Feature>(b.column));
    jb["degree"] = b.degree;
    jb["means"] = b.means;
    jb["norms"] = b.norms;
    jb["proj"] = b.proj;
    doc["basis_parameters"].push_back(std::move(jb));
  }

  doc["coefficients"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < file.model.fit.beta.size(); ++i)
    doc["coefficients"].push_back(file.model.fit.beta(i));

  doc["training_n"] = file.model.fit.n;
  doc["loglik"] = file.model.fit.loglik;
  doc["bic_score"] = file.model.score.bic_score;
  return doc;
}

inline ModelFile model_from_json(const nlohmann::ordered_json& doc) {
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw std::invalid_argument("model file: missing schema_version");
  if (doc["schema_version"].get<int>() != kModelSchemaVersion)
    throw std::invalid_argument("model file: schema version " +
                                doc["schema_version"].dump() + " is not supported (expected " +
                                std::to_string(kModelSchemaVersion) + ")");
  ModelFile file;
  file.grid.concentrations = doc.at("dilution_grid").get<std::vector<double>>();
  file.grid.validate();

  for (const auto& jt : doc.at("term_list")) {
    PolyTerms t;
    t.column = static_cast<int>(feature_from_name(jt.at("feature").get<std::string>()));
    t.max_degree = jt.at("degree").get<int>();
    file.model.terms.push_back(t);
  }

  for (const auto& jb : doc.at("basis_parameters")) {
    PolyBasis::Block b;
    b.column = static_cast<int>(feature_from_name(jb.at("feature").get<std::string>()));
    b.degree = jb.at("degree").get<int>();
    b.means = jb.at("means").get<std::vector<double>>();
    b.norms = jb.at("norms").get<std::vector<double>>();
    b.proj = jb.at("proj").get<std::vector<std::vector<double>>>();
    file.model.basis.mutable_blocks().push_back(std::move(b));
  }

  const auto coef = doc.at("coefficients").get<std::vector<double>>();
  file.model.fit.beta = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
  file.model.fit.n = doc.at("training_n").get<int>();
  file.model.fit.d = static_cast<int>(coef.size());
  file.model.fit.loglik = doc.at("loglik").get<double>();
  file.model.fit.deviance = -2.0 * file.model.fit.loglik;
  file.model.fit.converged = true;

  file.model.score.terms = file.model.terms;
  file.model.score.loglik = file.model.fit.loglik;
  file.model.score.d = file.model.fit.d;
  file.model.score.n = file.model.fit.n;
  file.model.score.bic_score = doc.at("bic_score").get<double>();

  if (file.model.basis.term_count() + 1 != file.model.fit.d)
    throw std::invalid_argument("model file: coefficients do not match the term list");
  return file;
}

inline void save_model(const std::string& path, const ModelFile& file) {
  AtomicFileWriter out(path);
  const std::string text = canonical_json(model_to_json(file));
  out.write_line(text.substr(0, text.size() - 1));  // write_line appends the newline
  out.commit();
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace micfit
