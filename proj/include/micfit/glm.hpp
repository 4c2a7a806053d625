#pragma once
// Logistic regression on orthogonal polynomial expansions of curve features.
// The basis is built once on training data (Gram-Schmidt per feature over
// {1, x, x^2, x^3}) and stored so validation data is transformed identically.
// Fitting is maximum likelihood via iteratively reweighted least squares with
// step halving; complete separation is capped and flagged rather than fatal.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace micfit {

// Probabilities are clipped away from {0,1} so downstream log-space products
// never degenerate.
constexpr double kProbClip = 1e-9;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One selected feature with its polynomial degree; degree d implies the
// design contains that feature at degrees 1..d (hierarchical prefix).
struct PolyTerms {
  int column = 0;
  int max_degree = 1;

  bool operator==(const PolyTerms& o) const {
    return column == o.column && max_degree == o.max_degree;
  }
};

// Orthonormal polynomial transform, one block per selected feature.  Within a
// block the transformed training columns are mutually orthogonal, unit-normed
// and orthogonal to the intercept.
class PolyBasis {
 public:
  struct Block {
    int column = 0;
    int degree = 1;
    // q_k(x) = (x^k - mean_k - sum_{j<k} proj[k-1][j] q_j(x)) / norm_k
    std::vector<double> means;
    std::vector<std::vector<double>> proj;
    std::vector<double> norms;
  };

  PolyBasis() = default;

  static PolyBasis build(const Eigen::MatrixXd& data, const std::vector<PolyTerms>& terms) {
    PolyBasis basis;
    const auto n = data.rows();
    for (const PolyTerms& term : terms) {
      if (term.column < 0 || term.column >= data.cols())
        throw std::invalid_argument("poly basis: column index out of range");
      if (term.max_degree < 1 || term.max_degree > 3)
        throw std::invalid_argument("poly basis: degree must be in {1,2,3}");
      const Eigen::VectorXd x = data.col(term.column);
      if (distinct_count(x, term.max_degree + 1) < term.max_degree + 1)
        throw std::invalid_argument(
            "poly basis: column needs at least degree+1 distinct values");

      Block block;
      block.column = term.column;
      block.degree = term.max_degree;
      std::vector<Eigen::VectorXd> q;
      Eigen::VectorXd power = Eigen::VectorXd::Ones(n);
      for (int k = 1; k <= term.max_degree; ++k) {
        power = power.cwiseProduct(x);
        Eigen::VectorXd v = power;
        double mean_total = 0.0;
        std::vector<double> proj_total(q.size(), 0.0);
        // Two Gram-Schmidt passes keep the block orthonormal to ~1e-14.
        for (int pass = 0; pass < 2; ++pass) {
          const double m = v.mean();
          v.array() -= m;
          mean_total += m;
          for (std::size_t j = 0; j < q.size(); ++j) {
            const double c = q[j].dot(v);
            v -= c * q[j];
            proj_total[j] += c;
          }
        }
        const double norm = v.norm();
        if (!(norm > 1e-12 * std::max(1.0, power.norm())))
          throw std::invalid_argument("poly basis: degenerate (near-constant) column");
        v /= norm;
        q.push_back(v);
        block.means.push_back(mean_total);
        block.proj.push_back(proj_total);
        block.norms.push_back(norm);
      }
      basis.blocks_.push_back(std::move(block));
    }
    return basis;
  }

  // Applies the stored transform; rows of `data` may be any sample set.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const {
    const auto n = data.rows();
    Eigen::MatrixXd out(n, term_count());
    int col = 0;
    for (const Block& block : blocks_) {
      Eigen::VectorXd power = Eigen::VectorXd::Ones(n);
      for (int k = 1; k <= block.degree; ++k) {
        power = power.cwiseProduct(data.col(block.column));
        Eigen::VectorXd v = power;
        v.array() -= block.means[k - 1];
        for (int j = 0; j < k - 1; ++j) v -= block.proj[k - 1][j] * out.col(col - (k - 1) + j);
        out.col(col) = v / block.norms[k - 1];
        ++col;
      }
    }
    return out;
  }

  int term_count() const {
    int c = 0;
    for (const Block& b : blocks_) c += b.degree;
    return c;
  }

  std::vector<PolyTerms> terms() const {
    std::vector<PolyTerms> t;
    for (const Block& b : blocks_) t.push_back({b.column, b.degree});
    return t;
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  std::vector<Block>& mutable_blocks() { return blocks_; }

 private:
  static int distinct_count(const Eigen::VectorXd& x, int cap) {
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    int distinct = v.empty() ? 0 : 1;
    for (std::size_t i = 1; i < v.size() && distinct < cap; ++i) {
      if (v[i] != v[i - 1]) ++distinct;
    }
    return distinct;
  }

  std::vector<Block> blocks_;
};

inline PolyBasis build_basis(const Eigen::MatrixXd& data, const std::vector<PolyTerms>& terms) {
  return PolyBasis::build(data, terms);
}

struct IrlsOptions {
  double tol = 1e-8;            // score max-norm threshold, scaled by n
  int max_iter = 50;
  double separation_cap = 30.0; // cap on the fitted logit magnitude max|eta|
};

struct LogisticFit {
  Eigen::VectorXd beta;   // intercept first, then one slope per design column
  double loglik = 0.0;
  double deviance = 0.0;  // -2 loglik for binary data (saturated loglik is 0)
  int n = 0;
  int d = 0;              // parameter count, slopes + intercept
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};

namespace detail {

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + e^eta), overflow-safe
inline double log1pexp(double eta) {
  if (eta > 35.0) return eta;
  return std::log1p(std::exp(eta));
}

inline double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1pexp(eta(i));
  return ll;
}

}  // namespace detail

// X is the design matrix of slope columns (no intercept column; the intercept
// is always fitted).  y must be {0,1}.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const IrlsOptions& opt = {}) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  if (X.rows() != n) throw std::invalid_argument("fit_logistic: X and y disagree on n");
  if (n <= p + 1) throw std::invalid_argument("fit_logistic: need n > parameter count");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0)
      throw std::invalid_argument("fit_logistic: labels must be 0 or 1");
  }

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  if (p > 0) design.rightCols(p) = X;

  LogisticFit fit;
  fit.n = static_cast<int>(n);
  fit.d = static_cast<int>(p) + 1;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);

  // Start the intercept at the empirical log-odds.
  const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  beta(0) = std::log(ybar / (1.0 - ybar));

  Eigen::VectorXd eta = design * beta;
  double loglik = detail::bernoulli_loglik(eta, y);

  auto newton_step = [&](Eigen::VectorXd& grad) -> Eigen::VectorXd {
    Eigen::VectorXd pi(n), wgt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pi(i) = detail::logistic(eta(i));
      wgt(i) = std::max(pi(i) * (1.0 - pi(i)), 1e-10);
    }
    grad = design.transpose() * (y - pi);
    Eigen::MatrixXd hess = design.transpose() * wgt.asDiagonal() * design;
    // A ridge whisker keeps duplicated or collinear columns solvable.
    hess.diagonal().array() += 1e-10;
    return hess.ldlt().solve(grad);
  };

  const double tol_n = opt.tol * static_cast<double>(n);
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd grad;
    const Eigen::VectorXd delta = newton_step(grad);

    if (grad.lpNorm<Eigen::Infinity>() <= tol_n) {
      // One polishing step: quadratic convergence puts the final iterate far
      // inside the tolerance (the intercept-only fit hits the mean exactly).
      const Eigen::VectorXd polished = beta + delta;
      const Eigen::VectorXd eta_p = design * polished;
      if (eta_p.lpNorm<Eigen::Infinity>() <= opt.separation_cap) {
        const double ll_p = detail::bernoulli_loglik(eta_p, y);
        if (ll_p >= loglik) {
          beta = polished;
          eta = eta_p;
          loglik = ll_p;
        }
      }
      fit.converged = true;
      break;
    }

    double step = 1.0;
    Eigen::VectorXd candidate = beta + delta;
    Eigen::VectorXd eta_c = design * candidate;
    double ll_c = detail::bernoulli_loglik(eta_c, y);
    for (int halving = 0; halving < 30 && ll_c < loglik; ++halving) {
      step *= 0.5;
      candidate = beta + step * delta;
      eta_c = design * candidate;
      ll_c = detail::bernoulli_loglik(eta_c, y);
    }
    beta = candidate;
    eta = eta_c;
    loglik = ll_c;

    // Separation sends eta to +-infinity; cap the fit at a logit magnitude
    // far past the probability clip and flag it rather than aborting.
    const double eta_max = eta.lpNorm<Eigen::Infinity>();
    if (eta_max > opt.separation_cap) {
      beta *= opt.separation_cap / eta_max;
      eta = design * beta;
      loglik = detail::bernoulli_loglik(eta, y);
      fit.separated = true;
      break;
    }
  }

  if (!fit.converged && !fit.separated)
    throw NumericalError("fit_logistic: IRLS did not converge in " +
                         std::to_string(opt.max_iter) + " iterations");

  fit.beta = beta;
  fit.loglik = loglik;
  fit.deviance = -2.0 * loglik;
  return fit;
}

inline double clip_probability(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

// pi-hat for one design row (already basis-transformed, no intercept entry).
inline double predict_prob(const LogisticFit& fit, const Eigen::RowVectorXd& design_row) {
  if (design_row.size() + 1 != fit.beta.size())
    throw std::invalid_argument("predict_prob: design row does not match fit");
  double eta = fit.beta(0);
  for (Eigen::Index j = 0; j < design_row.size(); ++j) eta += fit.beta(j + 1) * design_row(j);
  return clip_probability(detail::logistic(eta));
}

inline Eigen::VectorXd predict_prob(const LogisticFit& fit, const Eigen::MatrixXd& design) {
  Eigen::VectorXd out(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    out(i) = predict_prob(fit, Eigen::RowVectorXd(design.row(i)));
  return out;
}

}  // namespace micfit
