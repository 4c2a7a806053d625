#pragma once
// Second-degree local polynomial regression (LOESS) with tricube weights.
// Each local quadratic is anchored at a sample time; its coefficients give
// the fitted value and the first/second derivatives directly.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace micfit {

// Immutable after construction; evaluation is const and thread-safe.
class LoessCurve {
 public:
  // span is the fraction of points in each local window, k = ceil(span * n).
  // Requires >= 3 points, strictly increasing times, and k >= 3.
  LoessCurve(std::vector<double> time, std::vector<double> value, double span)
      : t_(std::move(time)), y_(std::move(value)), span_(span) {
    if (t_.size() != y_.size()) throw std::invalid_argument("loess: ragged input");
    if (t_.size() < 3) throw std::invalid_argument("loess: need at least 3 points");
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
      if (!(t_[i] < t_[i + 1]))
        throw std::invalid_argument("loess: times must be strictly increasing");
    }
    if (!(span_ > 0.0) || span_ > 1.0) throw std::invalid_argument("loess: span not in (0,1]");
    const int n = static_cast<int>(t_.size());
    k_ = static_cast<int>(std::ceil(span_ * n));
    if (k_ > n) k_ = n;
    if (k_ < 3)
      throw std::invalid_argument("loess: window of " + std::to_string(k_) +
                                  " points is degenerate; increase span");
  }

  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  double span() const { return span_; }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return y_; }

  // order 0 = fitted value, 1 = first derivative, 2 = second derivative.
  double eval(double t, int order = 0) const {
    if (order < 0 || order > 2) throw std::invalid_argument("loess: order must be 0, 1 or 2");
    return eval_all(t)[static_cast<std::size_t>(order)];
  }

  // Value and both derivatives from one local fit.  The regression is
  // anchored at the sample time nearest to t and all three outputs come from
  // that one local polynomial, so they are mutually consistent around each
  // sample.
  std::array<double, 3> eval_all(double t) const {
    if (t < t_min() - 1e-12 || t > t_max() + 1e-12)
      throw std::domain_error("loess: evaluation time outside fitted domain");
    t = std::clamp(t, t_min(), t_max());

    const int n = static_cast<int>(t_.size());
    int anchor = static_cast<int>(std::lower_bound(t_.begin(), t_.end(), t) - t_.begin());
    if (anchor == n || (anchor > 0 && t - t_[anchor - 1] <= t_[anchor] - t)) --anchor;
    const double c = t_[anchor];

    // k nearest neighbours of the anchor form a contiguous window.
    int lo = anchor;
    int hi = anchor + 1;  // window is [lo, hi)
    while (hi - lo < k_) {
      if (lo == 0) {
        ++hi;
      } else if (hi == n) {
        --lo;
      } else if (c - t_[lo - 1] <= t_[hi] - c) {
        --lo;
      } else {
        ++hi;
      }
    }
    const double h = std::max(c - t_[lo], t_[hi - 1] - c);

    auto tricube = [](double u) {
      const double w = 1.0 - u * u * u;
      return w * w * w;
    };
    auto positive_weights = [&](double bandwidth, std::vector<double>& w) {
      w.assign(k_, 0.0);
      int count = 0;
      for (int i = lo; i < hi; ++i) {
        const double u = std::abs(t_[i] - c) / bandwidth;
        if (u < 1.0) {
          w[i - lo] = tricube(u);
          ++count;
        }
      }
      return count;
    };

    std::vector<double> w;
    // A boundary point at distance exactly h gets weight zero; if that leaves
    // fewer than three usable points the window cannot support a quadratic,
    // so the bandwidth is inflated 5% to keep every window point in play.
    if (positive_weights(h, w) < 3) positive_weights(1.05 * h, w);

    // Weighted quadratic in (t_i - anchor); falls back to lower degree on
    // rank deficiency per window.
    int m = 0;
    for (double wi : w)
      if (wi > 0.0) ++m;
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd b(m);
    int r = 0;
    for (int i = lo; i < hi; ++i) {
      const double wi = w[i - lo];
      if (wi <= 0.0) continue;
      const double sw = std::sqrt(wi);
      const double x = t_[i] - c;
      a(r, 0) = sw;
      a(r, 1) = sw * x;
      a(r, 2) = sw * x * x;
      b(r) = sw * y_[i];
      ++r;
    }

    const double dx = t - c;
    for (int degree = 2; degree >= 0; --degree) {
      const int cols = degree + 1;
      if (m < cols) continue;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.leftCols(cols));
      if (qr.rank() < cols) continue;
      Eigen::Vector3d beta = Eigen::Vector3d::Zero();
      beta.head(cols) = qr.solve(b);
      return {beta(0) + beta(1) * dx + beta(2) * dx * dx, beta(1) + 2.0 * beta(2) * dx,
              2.0 * beta(2)};
    }
    throw std::runtime_error("loess: degenerate local window");
  }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  double span_;
  int k_;
};

inline LoessCurve loess_fit(std::vector<double> time, std::vector<double> value, double span) {
  return LoessCurve(std::move(time), std::move(value), span);
}

inline double loess_eval(const LoessCurve& curve, double t, int order = 0) {
  return curve.eval(t, order);
}

}  // namespace micfit
