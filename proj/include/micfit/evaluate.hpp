#pragma once
// Validation protocol: reproducible train/validation splits, essential
// agreement (within one two-fold dilution), categorical SIR agreement with
// the regulatory error taxonomy, and residual tables for loss-vs-error
// diagnostics.

#include "micfit/mic.hpp"
#include "micfit/panel.hpp"
#include "micfit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace micfit {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Panel-level random split; deterministic in (n, fraction, seed).  The train
// count is fraction*n rounded half up.
inline SplitIndices split_panels(std::size_t n_panels, double train_fraction,
                                 std::uint64_t seed) {
  if (n_panels == 0) throw std::invalid_argument("split_panels: no panels");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_panels: fraction must be in (0,1)");
  std::vector<std::size_t> order(n_panels);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(splitmix64(seed ^ 0x5e1ec7ab1e5ull));
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n_panels) + 0.5));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

// One estimated/reference pair, both as 1-based bin indices (J+1 = above the
// grid, which agrees exactly with an above-grid reference).
struct IndexCall {
  int estimate = 0;
  int reference = 0;
};

struct AgreementReport {
  int n = 0;
  int under_count = 0;   // est - ref < -1
  int within_count = 0;  // |est - ref| <= 1
  int over_count = 0;    // est - ref > +1
  double under_pct = 0.0;
  double within_pct = 0.0;
  double over_pct = 0.0;
  std::vector<int> distances;  // est - ref, in log2 dilution index units
};

inline AgreementReport essential_agreement(const std::vector<IndexCall>& calls) {
  AgreementReport r;
  r.n = static_cast<int>(calls.size());
  for (const IndexCall& c : calls) {
    const int d = c.estimate - c.reference;
    r.distances.push_back(d);
    if (d < -1) ++r.under_count;
    else if (d > 1) ++r.over_count;
    else ++r.within_count;
  }
  if (r.n > 0) {
    r.under_pct = 100.0 * r.under_count / r.n;
    r.within_pct = 100.0 * r.within_count / r.n;
    r.over_pct = 100.0 * r.over_count / r.n;
  }
  return r;
}

// CLSI-style breakpoints: susceptible at or below the lower concentration,
// resistant at or above the higher one, intermediate in between.
struct SirBreakpoints {
  double susceptible_max = 8.0;
  double resistant_min = 32.0;

  void validate(const DilutionGrid& grid) const {
    if (!(susceptible_max < resistant_min))
      throw std::invalid_argument("breakpoints: susceptible_max must be < resistant_min");
    grid.index_of(susceptible_max);
    grid.index_of(resistant_min);
  }
};

enum class SirClass { susceptible, intermediate, resistant };

// Bin index -> SIR class; index J+1 (above the grid) is resistant.
inline SirClass classify_sir(int bin_index, const DilutionGrid& grid,
                             const SirBreakpoints& bp) {
  if (bin_index < 1 || bin_index > grid.size() + 1)
    throw std::invalid_argument("classify_sir: index out of range");
  if (bin_index == grid.size() + 1) return SirClass::resistant;
  const double mic = grid.concentrations[bin_index - 1];
  if (mic <= bp.susceptible_max) return SirClass::susceptible;
  if (mic >= bp.resistant_min) return SirClass::resistant;
  return SirClass::intermediate;
}

struct CategoricalReport {
  int n = 0;
  int n_susceptible = 0;  // by reference class
  int n_intermediate = 0;
  int n_resistant = 0;
  int agree_count = 0;
  int very_major_count = 0;  // called S, reference R
  int major_count = 0;       // called R, reference S
  int minor_count = 0;       // any other disagreement
  double agreement_pct = 0.0;
  double very_major_rate = 0.0;  // percent of reference-resistant isolates
  double major_rate = 0.0;       // percent of reference-susceptible isolates
};

inline CategoricalReport categorical_agreement(const std::vector<IndexCall>& calls,
                                               const DilutionGrid& grid,
                                               const SirBreakpoints& bp) {
  bp.validate(grid);
  CategoricalReport r;
  r.n = static_cast<int>(calls.size());
  for (const IndexCall& c : calls) {
    const SirClass est = classify_sir(c.estimate, grid, bp);
    const SirClass ref = classify_sir(c.reference, grid, bp);
    switch (ref) {
      case SirClass::susceptible: ++r.n_susceptible; break;
      case SirClass::intermediate: ++r.n_intermediate; break;
      case SirClass::resistant: ++r.n_resistant; break;
    }
    if (est == ref) {
      ++r.agree_count;
    } else if (est == SirClass::susceptible && ref == SirClass::resistant) {
      ++r.very_major_count;
    } else if (est == SirClass::resistant && ref == SirClass::susceptible) {
      ++r.major_count;
    } else {
      ++r.minor_count;
    }
  }
  if (r.n > 0) r.agreement_pct = 100.0 * r.agree_count / r.n;
  if (r.n_resistant > 0) r.very_major_rate = 100.0 * r.very_major_count / r.n_resistant;
  if (r.n_susceptible > 0) r.major_rate = 100.0 * r.major_count / r.n_susceptible;
  return r;
}

// One validation panel per row: residuals for both estimators, the modal
// loss 1 - rho[modal], and the expected loss at the DT estimate.
struct ResidualRow {
  int modal_residual = 0;  // modal index - reference index
  int dt_residual = 0;
  double modal_loss = 0.0;
  double dt_loss = 0.0;
};

struct ResidualTable {
  std::vector<ResidualRow> rows;
  std::vector<ResidualRow> confident;  // subset with rho[modal] >= 0.5
};

inline ResidualTable residual_table(const std::vector<MicCall>& calls,
                                    const std::vector<MicDistribution>& distributions,
                                    const std::vector<int>& reference_bins,
                                    const LossWeights& w = {}) {
  if (calls.size() != distributions.size() || calls.size() != reference_bins.size())
    throw std::invalid_argument("residual_table: misaligned inputs");
  ResidualTable table;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    ResidualRow row;
    row.modal_residual = calls[i].modal_index - reference_bins[i];
    row.dt_residual = calls[i].dt_index - reference_bins[i];
    row.modal_loss = 1.0 - calls[i].modal_prob;
    row.dt_loss = expected_loss(distributions[i], calls[i].dt_index, w);
    table.rows.push_back(row);
    if (calls[i].modal_prob >= 0.5) table.confident.push_back(row);
  }
  return table;
}

}  // namespace micfit
