#include "micfit/glm.hpp"
#include "micfit/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace micfit;

namespace {

Eigen::MatrixXd column(const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

double loglik_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double eta = beta(0);
    for (Eigen::Index j = 0; j < X.cols(); ++j) eta += beta(j + 1) * X(i, j);
    ll += y(i) * eta - (eta > 35.0 ? eta : std::log1p(std::exp(eta)));
  }
  return ll;
}

}  // namespace

TEST_CASE("degree-1 basis is the centred unit-normed column", "[glm]") {
  const Eigen::MatrixXd data = column({1.0, 4.0, 2.5, -3.0, 0.5});
  const PolyBasis basis = PolyBasis::build(data, {{0, 1}});
  const Eigen::MatrixXd q = basis.transform(data);
  Eigen::VectorXd centred = data.col(0);
  centred.array() -= centred.mean();
  centred /= centred.norm();
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    REQUIRE(q(i, 0) == Catch::Approx(centred(i)).margin(1e-12));
}

TEST_CASE("symmetric three-point design gives orthogonal degree-1/2 columns", "[glm]") {
  const Eigen::MatrixXd data = column({-1.0, 0.0, 1.0});
  const PolyBasis basis = PolyBasis::build(data, {{0, 2}});
  const Eigen::MatrixXd q = basis.transform(data);
  REQUIRE(std::abs(q.col(0).dot(q.col(1))) < 1e-12);
  REQUIRE(std::abs(q.col(0).sum()) < 1e-12);
  REQUIRE(std::abs(q.col(1).sum()) < 1e-12);
}

TEST_CASE("cubic basis Gram matrix is the identity", "[glm]") {
  Rng rng(2024);
  std::vector<double> v(100);
  for (double& x : v) x = rng.uniform();
  const Eigen::MatrixXd data = column(v);
  const PolyBasis basis = PolyBasis::build(data, {{0, 3}});
  const Eigen::MatrixXd q = basis.transform(data);
  const Eigen::MatrixXd gram = q.transpose() * q;
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index b = 0; b < 3; ++b) {
      REQUIRE(gram(a, b) == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-10));
    }
  }
  // orthogonal to the intercept as well
  for (Eigen::Index c = 0; c < 3; ++c) REQUIRE(std::abs(q.col(c).sum()) < 1e-10);
}

TEST_CASE("constant and near-degenerate columns are rejected", "[glm]") {
  REQUIRE_THROWS_AS(PolyBasis::build(column({2.0, 2.0, 2.0, 2.0}), {{0, 1}}),
                    std::invalid_argument);
  // two distinct values cannot support a quadratic
  REQUIRE_THROWS_AS(PolyBasis::build(column({1.0, 2.0, 1.0, 2.0}), {{0, 2}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(PolyBasis::build(column({1.0, 2.0, 3.0}), {{0, 4}}),
                    std::invalid_argument);
}

TEST_CASE("intercept-only fit recovers the sample mean exactly", "[glm]") {
  Eigen::VectorXd y(8);
  y << 1, 1, 1, 1, 1, 1, 0, 0;  // mean 0.75
  const LogisticFit fit = fit_logistic(Eigen::MatrixXd(8, 0), y);
  REQUIRE(fit.converged);
  REQUIRE(fit.d == 1);
  const double pi = detail::logistic(fit.beta(0));
  REQUIRE(pi == Catch::Approx(0.75).margin(1e-12));
  REQUIRE(fit.beta(0) == Catch::Approx(std::log(3.0)).margin(1e-9));
  REQUIRE(fit.deviance == Catch::Approx(-2.0 * fit.loglik));
}

TEST_CASE("score equations hold at the fitted coefficients", "[glm][property]") {
  Rng rng(555);
  const int n = 400;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.uniform(-1.0, 1.0);
    const double eta = -0.3 + 0.8 * X(i, 0) - 1.1 * X(i, 1);
    y(i) = rng.uniform() < detail::logistic(eta) ? 1.0 : 0.0;
  }
  const IrlsOptions opt;
  const LogisticFit fit = fit_logistic(X, y, opt);
  REQUIRE(fit.converged);
  REQUIRE_FALSE(fit.separated);

  Eigen::VectorXd resid(n);
  for (int i = 0; i < n; ++i) {
    const double eta = fit.beta(0) + X.row(i).dot(fit.beta.tail(2));
    resid(i) = y(i) - detail::logistic(eta);
  }
  REQUIRE(std::abs(resid.sum()) <= opt.tol * n);
  REQUIRE(std::abs(X.col(0).dot(resid)) <= opt.tol * n);
  REQUIRE(std::abs(X.col(1).dot(resid)) <= opt.tol * n);

  // nesting: at least as likely as the intercept-only fit
  const LogisticFit null_fit = fit_logistic(Eigen::MatrixXd(n, 0), y);
  REQUIRE(fit.loglik >= null_fit.loglik - 1e-12);
}

TEST_CASE("fitted likelihood matches a dense grid search", "[glm]") {
  // n <= 20, d = 2: the grid over [-10,10]^2 at step 0.01 brackets the MLE
  Rng rng(808);
  const int n = 20;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(-1.5, 1.5);
    y(i) = rng.uniform() < detail::logistic(0.4 + 0.9 * X(i, 0)) ? 1.0 : 0.0;
  }
  const LogisticFit fit = fit_logistic(X, y);
  REQUIRE(fit.converged);

  double best = -1e300;
  Eigen::VectorXd beta(2);
  for (int a = -1000; a <= 1000; ++a) {
    beta(0) = a * 0.01;
    for (int b = -1000; b <= 1000; ++b) {
      beta(1) = b * 0.01;
      best = std::max(best, loglik_at(X, y, beta));
    }
  }
  REQUIRE(fit.loglik >= best - 1e-12);   // grid cannot beat the MLE
  REQUIRE(fit.loglik - best <= 1e-3);    // and lands within the grid resolution
}

TEST_CASE("labels independent of X leave the slope near zero", "[glm]") {
  Rng rng(99);
  const int n = 1000;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    y(i) = i % 2 == 0 ? 1.0 : 0.0;  // permuted labels, no relation to X
  }
  const LogisticFit fit = fit_logistic(X, y);
  REQUIRE(fit.converged);
  // slope standard error on a ~unit-variance column with pi=0.5: 2/sqrt(n)
  REQUIRE(std::abs(fit.beta(1)) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("complete separation is capped and flagged", "[glm]") {
  Eigen::MatrixXd X(4, 1);
  X << -1.0, -0.5, 0.5, 1.0;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;

  // oracle: the likelihood keeps improving along the separating direction,
  // so there is no finite maximizer and the cap must engage
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(2);
  double prev = -1e300;
  for (double slope : {5.0, 15.0, 30.0}) {
    probe(1) = slope;
    const double ll = loglik_at(X, y, probe);
    REQUIRE(ll > prev);
    prev = ll;
  }

  const IrlsOptions opt;
  const LogisticFit fit = fit_logistic(X, y, opt);
  REQUIRE(fit.separated);
  REQUIRE(fit.beta.lpNorm<Eigen::Infinity>() <= opt.separation_cap + 1e-12);

  // at the cap the training etas are past the clip boundary on both sides
  const Eigen::VectorXd pi = predict_prob(fit, X);
  REQUIRE(pi(0) == kProbClip);
  REQUIRE(pi(3) == 1.0 - kProbClip);
}

TEST_CASE("prediction probabilities are clipped logistic values", "[glm]") {
  LogisticFit fit;
  fit.beta = Eigen::VectorXd::Zero(1);
  fit.n = 10;
  fit.d = 1;
  Eigen::RowVectorXd empty_row(0);
  REQUIRE(predict_prob(fit, empty_row) == Catch::Approx(0.5));

  fit.beta(0) = std::log(3.0);  // logit(0.75)
  REQUIRE(predict_prob(fit, empty_row) == Catch::Approx(0.75));

  fit.beta = Eigen::VectorXd::Zero(2);
  fit.beta(1) = 100.0;
  Eigen::RowVectorXd row(1);
  row << 1.0;
  REQUIRE(predict_prob(fit, row) == 1.0 - kProbClip);
  row << -1.0;
  REQUIRE(predict_prob(fit, row) == kProbClip);
}

TEST_CASE("raw and orthogonal parameterizations predict identically", "[glm]") {
  Rng rng(31415);
  const int n = 300;
  Eigen::MatrixXd raw(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    raw(i, 0) = rng.uniform(-2.0, 2.0);
    const double eta = 0.3 + 0.7 * raw(i, 0) - 0.4 * raw(i, 0) * raw(i, 0);
    y(i) = rng.uniform() < detail::logistic(eta) ? 1.0 : 0.0;
  }

  const PolyBasis basis = PolyBasis::build(raw, {{0, 2}});
  const LogisticFit orth_fit = fit_logistic(basis.transform(raw), y);
  REQUIRE(orth_fit.converged);
  REQUIRE_FALSE(orth_fit.separated);

  Eigen::MatrixXd raw_design(n, 2);
  raw_design.col(0) = raw.col(0);
  raw_design.col(1) = raw.col(0).cwiseProduct(raw.col(0));
  const LogisticFit raw_fit = fit_logistic(raw_design, y);
  REQUIRE(raw_fit.converged);

  const Eigen::VectorXd pi_orth = predict_prob(orth_fit, basis.transform(raw));
  const Eigen::VectorXd pi_raw = predict_prob(raw_fit, raw_design);
  for (int i = 0; i < n; ++i)
    REQUIRE(pi_orth(i) == Catch::Approx(pi_raw(i)).margin(1e-8));
}

TEST_CASE("fit_logistic validates its input", "[glm]") {
  Eigen::VectorXd y(3);
  y << 0, 1, 0.5;
  REQUIRE_THROWS_AS(fit_logistic(Eigen::MatrixXd(3, 0), y), std::invalid_argument);
  Eigen::VectorXd y2(2);
  y2 << 0, 1;
  REQUIRE_THROWS_AS(fit_logistic(Eigen::MatrixXd(2, 1), y2), std::invalid_argument);
}
