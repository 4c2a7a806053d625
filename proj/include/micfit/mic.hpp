#pragma once
// MIC posterior over dilution bins.  Given per-well growth probabilities
// pi_1..pi_J (wells ordered by increasing dilution), the probability that
// bin j holds the MIC is proportional to the likelihood of the unique valid
// growth sequence 1...1 0...0 with the transition at j.  Bin J+1 means the
// MIC exceeds the highest dilution.  Estimates: the modal bin, and a
// decision-theoretic bin minimizing an asymmetric expected loss that
// penalizes underestimation hardest.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace micfit {

struct MicDistribution {
  std::vector<double> dilutions;  // D_1..D_J (optional labels; may be empty)
  std::vector<double> rho;        // rho_1..rho_{J+1}, sums to 1
  double valid_sequence_prob = 0.0;  // unnormalized mass of the J+1 valid sequences

  int bins() const { return static_cast<int>(rho.size()); }
  // 1-based access matching the bin convention
  double at(int j) const { return rho[static_cast<std::size_t>(j) - 1]; }
};

struct LossWeights {
  double under = 5.0;       // w1: true MIC above the call by >1 dilution
  double over = 1.0;        // w2: true MIC below the call by >1 dilution
  double within_one = 0.0;  // w3: off by exactly one dilution

  void validate() const {
    if (under < 0.0 || over < 0.0 || within_one < 0.0)
      throw std::invalid_argument("loss weights must be nonnegative");
  }
};

enum class CallDecision { call, delay };

struct MicCall {
  int modal_index = 0;  // 1..J+1
  int dt_index = 0;     // 1..J+1
  double modal_prob = 0.0;
  double dt_expected_loss = 0.0;
  double window_prob = 0.0;  // mass within one bin of the DT estimate
  CallDecision decision = CallDecision::delay;
};

// Computes rho from growth probabilities, products done as sums of logs with
// a log-sum-exp normalization.  Requires every pi in (0,1); clip upstream.
inline MicDistribution mic_distribution(const std::vector<double>& pi,
                                        std::vector<double> dilutions = {}) {
  const int J = static_cast<int>(pi.size());
  if (J == 0) throw std::invalid_argument("mic_distribution: no wells");
  if (!dilutions.empty() && static_cast<int>(dilutions.size()) != J)
    throw std::invalid_argument("mic_distribution: dilution labels do not match wells");
  std::vector<double> log_pi(J), log_1mpi(J);
  for (int k = 0; k < J; ++k) {
    if (!(pi[k] > 0.0 && pi[k] < 1.0))
      throw std::invalid_argument("mic_distribution: growth probabilities must be in (0,1)");
    log_pi[k] = std::log(pi[k]);
    log_1mpi[k] = std::log1p(-pi[k]);
  }

  // log weight of the valid sequence with transition at bin j (1-based):
  // sum_{k<j} log pi_k + sum_{k>=j} log(1-pi_k)
  std::vector<double> logw(J + 1, 0.0);
  double suffix = 0.0;
  for (int k = 0; k < J; ++k) suffix += log_1mpi[k];
  double prefix = 0.0;
  for (int j = 0; j <= J; ++j) {
    logw[j] = prefix + suffix;
    if (j < J) {
      prefix += log_pi[j];
      suffix -= log_1mpi[j];
    }
  }

  const double lmax = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double lw : logw) total += std::exp(lw - lmax);

  MicDistribution dist;
  dist.dilutions = std::move(dilutions);
  dist.rho.resize(J + 1);
  for (int j = 0; j <= J; ++j) dist.rho[j] = std::exp(logw[j] - lmax) / total;
  dist.valid_sequence_prob = std::exp(lmax + std::log(total));
  return dist;
}

// Largest-probability bin; ties break to the higher index (against
// underestimation).
inline int modal_mic(const MicDistribution& dist) {
  int best = 1;
  for (int j = 2; j <= dist.bins(); ++j) {
    if (dist.at(j) >= dist.at(best)) best = j;
  }
  return best;
}

// Expected loss of calling bin j: w1 on mass more than one bin above,
// w2 on mass more than one bin below, w3 on the two adjacent bins.
inline double expected_loss(const MicDistribution& dist, int j, const LossWeights& w = {}) {
  const int bins = dist.bins();
  if (j < 1 || j > bins) throw std::invalid_argument("expected_loss: index out of range");
  double above = 0.0, below = 0.0, adjacent = 0.0;
  for (int k = 1; k <= bins; ++k) {
    if (k > j + 1) above += dist.at(k);
    else if (k < j - 1) below += dist.at(k);
    else if (k != j) adjacent += dist.at(k);
  }
  return w.under * above + w.over * below + w.within_one * adjacent;
}

// Minimum-expected-loss bin; ties break to the larger rho, then the higher
// index.
inline int dt_mic(const MicDistribution& dist, const LossWeights& w = {}) {
  w.validate();
  int best = 1;
  double best_loss = expected_loss(dist, 1, w);
  for (int j = 2; j <= dist.bins(); ++j) {
    const double loss = expected_loss(dist, j, w);
    if (loss < best_loss || (loss == best_loss && dist.at(j) >= dist.at(best))) {
      best = j;
      best_loss = loss;
    }
  }
  return best;
}

// Probability mass within one bin of the estimate, truncated at the edges.
inline double window_prob(const MicDistribution& dist, int estimate_index) {
  if (estimate_index < 1 || estimate_index > dist.bins())
    throw std::invalid_argument("window_prob: index out of range");
  double mass = 0.0;
  for (int k = std::max(1, estimate_index - 1); k <= std::min(dist.bins(), estimate_index + 1);
       ++k)
    mass += dist.at(k);
  return mass;
}

// Call when the estimate plus/minus one dilution holds at least `threshold`
// probability; otherwise keep incubating and re-estimate later.
inline CallDecision call_or_delay(const MicDistribution& dist, int estimate_index,
                                  double threshold = 0.9) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("call_or_delay: threshold must be in (0,1]");
  return window_prob(dist, estimate_index) >= threshold ? CallDecision::call
                                                        : CallDecision::delay;
}

// Bundles both estimators and the call decision (gated on the DT estimate).
inline MicCall make_mic_call(const MicDistribution& dist, const LossWeights& w = {},
                             double call_threshold = 0.9) {
  MicCall call;
  call.modal_index = modal_mic(dist);
  call.dt_index = dt_mic(dist, w);
  call.modal_prob = dist.at(call.modal_index);
  call.dt_expected_loss = expected_loss(dist, call.dt_index, w);
  call.window_prob = window_prob(dist, call.dt_index);
  call.decision = call_or_delay(dist, call.dt_index, call_threshold);
  return call;
}

}  // namespace micfit
