#include "micfit/loess.hpp"
#include "micfit/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace micfit;

namespace {

std::vector<double> time_grid(int n, double t_max) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = t_max * i / (n - 1);
  return t;
}

// Oracle: direct tricube-weighted quadratic least squares at one point,
// solved through the normal equations.  Shares nothing with LoessCurve::eval
// beyond the definition of the estimator.
double direct_wls(const std::vector<double>& t, const std::vector<double>& y, double at,
                  double span, int order) {
  const int n = static_cast<int>(t.size());
  const int k = static_cast<int>(std::ceil(span * n));
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) dist[i] = {std::abs(t[i] - at), i};
  std::sort(dist.begin(), dist.end());
  double h = dist[k - 1].first;
  int positive = 0;
  for (int i = 0; i < k; ++i)
    if (dist[i].first < h) ++positive;
  if (positive < 3) h *= 1.05;

  double s[5] = {0, 0, 0, 0, 0};
  double b[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double u = std::abs(t[i] - at) / h;
    if (u >= 1.0) continue;
    const double c = 1.0 - u * u * u;
    const double w = c * c * c;
    const double x = t[i] - at;
    double xp = 1.0;
    for (int p = 0; p <= 4; ++p, xp *= x) s[p] += w * xp;
    xp = 1.0;
    for (int p = 0; p <= 2; ++p, xp *= x) b[p] += w * xp * y[i];
  }
  // solve the 3x3 normal equations by Cramer's rule
  const double a11 = s[0], a12 = s[1], a13 = s[2];
  const double a22 = s[2], a23 = s[3], a33 = s[4];
  const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                     a13 * (a12 * a23 - a22 * a13);
  const double d0 = b[0] * (a22 * a33 - a23 * a23) - a12 * (b[1] * a33 - a23 * b[2]) +
                    a13 * (b[1] * a23 - a22 * b[2]);
  const double d1 = a11 * (b[1] * a33 - b[2] * a23) - b[0] * (a12 * a33 - a23 * a13) +
                    a13 * (a12 * b[2] - b[1] * a13);
  const double d2 = a11 * (a22 * b[2] - a23 * b[1]) - a12 * (a12 * b[2] - b[1] * a13) +
                    b[0] * (a12 * a23 - a22 * a13);
  if (order == 0) return d0 / det;
  if (order == 1) return d1 / det;
  return 2.0 * d2 / det;
}

}  // namespace

TEST_CASE("loess rejects degenerate input", "[loess]") {
  REQUIRE_THROWS_AS(LoessCurve({0.0, 1.0}, {0.0, 1.0}, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(LoessCurve({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(LoessCurve({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(LoessCurve({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}, 1.5), std::invalid_argument);
  // span too small for a 3-point window
  const auto t = time_grid(50, 10.0);
  REQUIRE_THROWS_AS(LoessCurve(t, t, 0.02), std::invalid_argument);
  // evaluation outside the domain is an error, not extrapolation
  const LoessCurve curve(time_grid(10, 8.0), time_grid(10, 8.0), 0.6);
  REQUIRE_THROWS_AS(curve.eval(-0.5), std::domain_error);
  REQUIRE_THROWS_AS(curve.eval(8.5), std::domain_error);
  REQUIRE_THROWS_AS(curve.eval(4.0, 3), std::invalid_argument);
}

TEST_CASE("degree <= 2 polynomials are reproduced exactly at every span", "[loess]") {
  const auto t = time_grid(40, 12.0);
  auto poly = [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; };
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = poly(t[i]);

  for (double span : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    const LoessCurve curve(t, y, span);
    for (double at : {0.0, 1.7, 4.0, 6.283, 9.5, 12.0}) {
      REQUIRE(curve.eval(at, 0) == Catch::Approx(poly(at)).margin(1e-9));
      REQUIRE(curve.eval(at, 1) == Catch::Approx(6.0 * at - 2.0).margin(1e-9));
      REQUIRE(curve.eval(at, 2) == Catch::Approx(6.0).margin(1e-9));
    }
  }
}

TEST_CASE("collinear points reproduce the line at every input time", "[loess]") {
  std::vector<double> t(10), y(10);
  for (int i = 0; i < 10; ++i) {
    t[i] = 0.3 * i;
    y[i] = 2.5 * t[i] - 0.75;
  }
  for (double span : {0.4, 0.7, 1.0}) {
    const LoessCurve curve(t, y, span);
    for (double at : t) REQUIRE(curve.eval(at) == Catch::Approx(2.5 * at - 0.75).margin(1e-10));
  }
}

TEST_CASE("three points with span 1 interpolate the quadratic through them", "[loess]") {
  const std::vector<double> t = {0.0, 1.0, 3.0};
  const std::vector<double> y = {1.0, 0.0, 4.0};
  const LoessCurve curve(t, y, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    REQUIRE(curve.eval(t[i]) == Catch::Approx(y[i]).margin(1e-9));
}

TEST_CASE("constant data has zero derivatives", "[loess]") {
  const auto t = time_grid(20, 16.0);
  const std::vector<double> y(t.size(), 0.42);
  const LoessCurve curve(t, y, 0.5);
  for (double at : {0.0, 5.0, 16.0}) {
    REQUIRE(curve.eval(at, 0) == Catch::Approx(0.42).margin(1e-12));
    REQUIRE(curve.eval(at, 1) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(curve.eval(at, 2) == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("fit agrees with the direct weighted-least-squares oracle", "[loess]") {
  Rng rng(99);
  const auto t = time_grid(50, 10.0);
  std::vector<double> clean(t.size()), y(t.size());
  double noise_ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    clean[i] = std::sin(t[i]);
    const double e = 0.1 * rng.normal();
    y[i] = clean[i] + e;
    noise_ss += e * e;
  }
  const double span = 0.5;
  const LoessCurve curve(t, y, span);

  double resid_ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double fit = curve.eval(t[i], 0);
    REQUIRE(fit == Catch::Approx(direct_wls(t, y, t[i], span, 0)).margin(1e-9));
    const double r = fit - clean[i];
    resid_ss += r * r;
  }
  // smoothing beats the raw noise
  REQUIRE(std::sqrt(resid_ss / t.size()) < std::sqrt(noise_ss / t.size()));
}

TEST_CASE("smoothing is linear in the observations", "[loess][property]") {
  Rng rng(7);
  const auto t = time_grid(30, 6.0);
  std::vector<double> y1(t.size()), y2(t.size()), combo(t.size());
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < t.size(); ++i) {
    y1[i] = rng.normal();
    y2[i] = rng.normal();
    combo[i] = a * y1[i] + b * y2[i];
  }
  const LoessCurve c1(t, y1, 0.5), c2(t, y2, 0.5), cc(t, combo, 0.5);
  for (double at : {0.0, 1.3, 2.9, 4.4, 6.0}) {
    for (int order : {0, 1, 2}) {
      REQUIRE(cc.eval(at, order) ==
              Catch::Approx(a * c1.eval(at, order) + b * c2.eval(at, order)).margin(1e-9));
    }
  }
}

TEST_CASE("analytic first derivative matches central finite differences", "[loess]") {
  const auto t = time_grid(50, 16.0);
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = 1.8 / (1.0 + std::exp(-(t[i] - 6.0)));
  const LoessCurve curve(t, y, 0.5);
  const double h = 1e-3;
  // note: 8.0 sits exactly between two samples where neighbouring local fits
  // meet, so probe points stay off the half-way marks
  for (double at : {2.0, 4.0, 6.0, 7.5, 12.0}) {
    const double analytic = curve.eval(at, 1);
    const double fd = (curve.eval(at + h, 0) - curve.eval(at - h, 0)) / (2.0 * h);
    REQUIRE(std::abs(analytic - fd) <= 1e-6 * (1.0 + std::abs(curve.eval(at, 0))));
  }
}
