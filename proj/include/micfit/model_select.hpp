#pragma once
// Bayesian model selection over feature subsets.  Model posteriors come from
// the BIC approximation p(M|Y) ~ exp(L - (d/2) log n), normalized in log
// space.  The search runs in two stages: a linear screening stage over
// feature subsets, then a polynomial expansion of the screened features with
// hierarchical degrees (quadratic only on top of linear, cubic on quadratic).

#include "micfit/glm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace micfit {

struct ModelScore {
  std::vector<PolyTerms> terms;  // empty = intercept-only
  double loglik = 0.0;
  int d = 1;  // parameter count including the intercept
  int n = 0;
  double bic_score = 0.0;  // L - (d/2) ln n
  double posterior = 0.0;
};

inline double bic_score(double loglik, int d, int n) {
  return loglik - 0.5 * static_cast<double>(d) * std::log(static_cast<double>(n));
}

// Normalized posterior probabilities for models given as (loglik, d) pairs.
inline std::vector<double> bic_posterior(const std::vector<std::pair<double, int>>& models,
                                         int n) {
  if (models.empty()) throw std::invalid_argument("bic_posterior: no models");
  if (n < 2) throw std::invalid_argument("bic_posterior: need n >= 2");
  std::vector<double> score(models.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < models.size(); ++m) {
    score[m] = bic_score(models[m].first, models[m].second, n);
    best = std::max(best, score[m]);
  }
  double total = 0.0;
  for (double& s : score) {
    s = std::exp(s - best);
    total += s;
  }
  for (double& s : score) s /= total;
  return score;
}

struct SearchOptions {
  int exhaustive_cap = 12;  // exhaustive subset search up to 2^cap models
  int top_k = 10;
  IrlsOptions irls;
};

// Fitted growth-probability model: term set, basis transform and
// coefficients, ready to score validation wells.
struct GrowthModel {
  std::vector<PolyTerms> terms;
  PolyBasis basis;
  LogisticFit fit;
  ModelScore score;

  double predict(const Eigen::RowVectorXd& raw_features) const {
    if (terms.empty()) return clip_probability(detail::logistic(fit.beta(0)));
    const Eigen::MatrixXd design = basis.transform(raw_features);
    return predict_prob(fit, Eigen::RowVectorXd(design.row(0)));
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& raw_features) const {
    Eigen::VectorXd out(raw_features.rows());
    if (terms.empty()) {
      out.setConstant(clip_probability(detail::logistic(fit.beta(0))));
      return out;
    }
    const Eigen::MatrixXd design = basis.transform(raw_features);
    return predict_prob(fit, design);
  }
};

namespace detail {

struct ScoredPool {
  // keyed by the flattened (column, degree) term list
  std::map<std::vector<std::pair<int, int>>, ModelScore> models;

  void add(const std::vector<PolyTerms>& terms, double loglik, int d, int n) {
    std::vector<std::pair<int, int>> key;
    for (const PolyTerms& t : terms) key.emplace_back(t.column, t.max_degree);
    ModelScore s;
    s.terms = terms;
    s.loglik = loglik;
    s.d = d;
    s.n = n;
    s.bic_score = bic_score(loglik, d, n);
    models.emplace(std::move(key), std::move(s));
  }

  bool contains(const std::vector<PolyTerms>& terms) const {
    std::vector<std::pair<int, int>> key;
    for (const PolyTerms& t : terms) key.emplace_back(t.column, t.max_degree);
    return models.count(key) > 0;
  }

  // Ranked by bic_score, ties to the smaller model then lexicographic terms;
  // posteriors are normalized over the whole pool.
  std::vector<ModelScore> ranked(int n) const {
    std::vector<ModelScore> all;
    std::vector<std::pair<double, int>> ld;
    for (const auto& [key, score] : models) {
      all.push_back(score);
      ld.emplace_back(score.loglik, score.d);
    }
    const std::vector<double> post = bic_posterior(ld, n);
    for (std::size_t i = 0; i < all.size(); ++i) all[i].posterior = post[i];
    std::stable_sort(all.begin(), all.end(), [](const ModelScore& a, const ModelScore& b) {
      if (a.bic_score != b.bic_score) return a.bic_score > b.bic_score;
      if (a.d != b.d) return a.d < b.d;
      return term_key(a.terms) < term_key(b.terms);
    });
    return all;
  }

  static std::vector<std::pair<int, int>> term_key(const std::vector<PolyTerms>& terms) {
    std::vector<std::pair<int, int>> key;
    for (const PolyTerms& t : terms) key.emplace_back(t.column, t.max_degree);
    return key;
  }
};

inline void check_labels(const Eigen::VectorXd& y) {
  bool any0 = false, any1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) any0 = true;
    else if (y(i) == 1.0) any1 = true;
    else throw std::invalid_argument("model search: labels must be 0 or 1");
  }
  if (!any0 || !any1)
    throw std::invalid_argument("model search: labels are degenerate (single class)");
}

}  // namespace detail

// Stage 1: screen feature subsets with linear terms only.  Exhaustive when
// the candidate count is within exhaustive_cap, greedy forward-backward
// stepwise (started from the empty and the full subset) above it.  Returns
// the top-k models by posterior probability.
inline std::vector<ModelScore> search_linear(const Eigen::MatrixXd& data,
                                             const Eigen::VectorXd& y,
                                             const std::vector<int>& candidates,
                                             const SearchOptions& opt = {}) {
  if (candidates.size() < 2)
    throw std::invalid_argument("search_linear: need at least 2 candidate features");
  detail::check_labels(y);
  const int n = static_cast<int>(y.size());
  const int F = static_cast<int>(candidates.size());

  // Each candidate's orthonormal linear column is shared by every subset.
  std::vector<Eigen::VectorXd> columns(F);
  for (int f = 0; f < F; ++f) {
    const PolyBasis b = PolyBasis::build(data, {{candidates[f], 1}});
    columns[f] = b.transform(data).col(0);
  }

  detail::ScoredPool pool;
  auto fit_subset = [&](const std::vector<int>& subset) -> double {
    std::vector<PolyTerms> terms;
    for (int f : subset) terms.push_back({candidates[f], 1});
    if (pool.contains(terms)) {
      return pool.models.at(detail::ScoredPool::term_key(terms)).bic_score;
    }
    Eigen::MatrixXd X(n, subset.size());
    for (std::size_t j = 0; j < subset.size(); ++j) X.col(j) = columns[subset[j]];
    try {
      const LogisticFit fit = fit_logistic(X, y, opt.irls);
      pool.add(terms, fit.loglik, fit.d, n);
      return bic_score(fit.loglik, fit.d, n);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();  // disqualified
    }
  };

  if (F <= opt.exhaustive_cap) {
    for (std::uint64_t mask = 0; mask < (1ull << F); ++mask) {
      std::vector<int> subset;
      for (int f = 0; f < F; ++f)
        if (mask & (1ull << f)) subset.push_back(f);
      fit_subset(subset);
    }
  } else {
    auto stepwise = [&](std::vector<int> current) {
      double current_score = fit_subset(current);
      for (;;) {
        double best_score = current_score;
        std::vector<int> best;
        bool improved = false;
        for (int f = 0; f < F; ++f) {
          std::vector<int> next = current;
          auto it = std::find(next.begin(), next.end(), f);
          if (it == next.end()) {
            next.push_back(f);
            std::sort(next.begin(), next.end());
          } else {
            next.erase(it);
          }
          const double s = fit_subset(next);
          if (s > best_score + 1e-12) {
            best_score = s;
            best = next;
            improved = true;
          }
        }
        if (!improved) break;
        current = best;
        current_score = best_score;
      }
    };
    std::vector<int> all(F);
    for (int f = 0; f < F; ++f) all[f] = f;
    stepwise({});
    stepwise(all);
  }

  std::vector<ModelScore> ranked = pool.ranked(n);
  if (static_cast<int>(ranked.size()) > opt.top_k) ranked.resize(opt.top_k);
  return ranked;
}

// Stage 2: expand the screened features with hierarchical polynomial degrees
// in {1,2,3} and return the highest-posterior model fitted on the full
// training data.  An empty stage-1 set yields the intercept-only model.
inline GrowthModel expand_and_select(const std::vector<int>& stage1_columns,
                                     const Eigen::MatrixXd& data, const Eigen::VectorXd& y,
                                     const SearchOptions& opt = {},
                                     std::vector<ModelScore>* scored = nullptr) {
  detail::check_labels(y);
  const int n = static_cast<int>(y.size());
  GrowthModel model;

  if (stage1_columns.empty()) {
    model.fit = fit_logistic(Eigen::MatrixXd(n, 0), y, opt.irls);
    model.score.terms = {};
    model.score.loglik = model.fit.loglik;
    model.score.d = model.fit.d;
    model.score.n = n;
    model.score.bic_score = bic_score(model.fit.loglik, model.fit.d, n);
    model.score.posterior = 1.0;
    if (scored) *scored = {model.score};
    return model;
  }

  const int s = static_cast<int>(stage1_columns.size());

  // Per feature, the degree-k transformed columns are prefixes of the
  // degree-3 transform, so each block is built once at its feasible maximum.
  std::vector<int> max_degree(s, 3);
  std::vector<Eigen::MatrixXd> block(s);
  for (int f = 0; f < s; ++f) {
    while (max_degree[f] > 1) {
      try {
        const PolyBasis b = PolyBasis::build(data, {{stage1_columns[f], max_degree[f]}});
        block[f] = b.transform(data);
        break;
      } catch (const std::invalid_argument&) {
        --max_degree[f];  // not enough distinct values for this degree
      }
    }
    if (max_degree[f] == 1) {
      const PolyBasis b = PolyBasis::build(data, {{stage1_columns[f], 1}});
      block[f] = b.transform(data);
    }
  }

  detail::ScoredPool pool;
  auto fit_degrees = [&](const std::vector<int>& degrees) -> double {
    std::vector<PolyTerms> terms;
    int cols = 0;
    for (int f = 0; f < s; ++f) {
      terms.push_back({stage1_columns[f], degrees[f]});
      cols += degrees[f];
    }
    if (pool.contains(terms)) {
      return pool.models.at(detail::ScoredPool::term_key(terms)).bic_score;
    }
    Eigen::MatrixXd X(n, cols);
    int c = 0;
    for (int f = 0; f < s; ++f) {
      X.middleCols(c, degrees[f]) = block[f].leftCols(degrees[f]);
      c += degrees[f];
    }
    try {
      const LogisticFit fit = fit_logistic(X, y, opt.irls);
      pool.add(terms, fit.loglik, fit.d, n);
      return bic_score(fit.loglik, fit.d, n);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  double combos = 1.0;
  for (int f = 0; f < s; ++f) combos *= max_degree[f];
  if (combos <= static_cast<double>(1ull << std::min(opt.exhaustive_cap, 30))) {
    std::vector<int> degrees(s, 1);
    for (;;) {
      fit_degrees(degrees);
      int f = 0;
      while (f < s && degrees[f] == max_degree[f]) degrees[f++] = 1;
      if (f == s) break;
      ++degrees[f];
    }
  } else {
    // Coordinate ascent over per-feature degrees from the all-linear model.
    std::vector<int> degrees(s, 1);
    double current = fit_degrees(degrees);
    bool improved = true;
    while (improved) {
      improved = false;
      for (int f = 0; f < s; ++f) {
        for (int delta : {+1, -1}) {
          const int nd = degrees[f] + delta;
          if (nd < 1 || nd > max_degree[f]) continue;
          std::vector<int> next = degrees;
          next[f] = nd;
          const double sc = fit_degrees(next);
          if (sc > current + 1e-12) {
            degrees = next;
            current = sc;
            improved = true;
          }
        }
      }
    }
  }

  std::vector<ModelScore> ranked = pool.ranked(n);
  if (scored) {
    *scored = ranked;
    if (static_cast<int>(scored->size()) > opt.top_k) scored->resize(opt.top_k);
  }
  const ModelScore& best = ranked.front();

  model.terms = best.terms;
  model.basis = PolyBasis::build(data, best.terms);
  model.fit = fit_logistic(model.basis.transform(data), y, opt.irls);
  model.score = best;
  return model;
}

struct TwoStageResult {
  GrowthModel model;
  std::vector<ModelScore> stage1;
  std::vector<ModelScore> stage2;
};

// The full two-stage procedure: linear screening, then polynomial expansion
// of the features present in the top screened model.
inline TwoStageResult two_stage_select(const Eigen::MatrixXd& data, const Eigen::VectorXd& y,
                                       const std::vector<int>& candidates,
                                       const SearchOptions& opt = {}) {
  TwoStageResult result;
  result.stage1 = search_linear(data, y, candidates, opt);
  std::vector<int> keep;
  for (const PolyTerms& t : result.stage1.front().terms) keep.push_back(t.column);
  std::sort(keep.begin(), keep.end());
  result.model = expand_and_select(keep, data, y, opt, &result.stage2);
  return result;
}

}  // namespace micfit
