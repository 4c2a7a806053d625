#include "micfit/readiness.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace micfit;

namespace {

// Control redox curves on the 20-minute grid out to 16.33 h.
LoessCurve redox_curve(double scale, double rate, double t0, double horizon_hours = 16.34) {
  std::vector<double> t, y;
  for (int i = 0; i * (1.0 / 3.0) <= horizon_hours; ++i) {
    const double ti = i / 3.0;
    t.push_back(ti);
    y.push_back(scale / (1.0 + std::exp(-rate * (ti - t0))));
  }
  return LoessCurve(t, y, 0.3);
}

}  // namespace

TEST_CASE("parameter validation", "[readiness]") {
  ReadinessParams bad;
  bad.low_redox = 0.3;  // above high_redox
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  ReadinessParams bad2;
  bad2.fast_cutoff_hours = 20.0;
  REQUIRE_THROWS_AS(bad2.validate(), std::invalid_argument);
  LoessCurve c = redox_curve(0.5, 1.0, 5.0);
  REQUIRE_THROWS_AS(assess_readiness(c, -1.0), std::invalid_argument);
}

TEST_CASE("redox in the in-between band keeps incubating", "[readiness]") {
  // plateaus at 0.15: above 0.07, never above 0.2
  const LoessCurve c = redox_curve(0.15, 2.0, 1.0);
  const IncubationStatus s = assess_readiness(c, 4.0);
  REQUIRE(s.kind == IncubationStatus::Kind::keep_incubating);
}

TEST_CASE("insufficient growth below the low threshold", "[readiness]") {
  const LoessCurve c = redox_curve(0.05, 2.0, 1.0);
  REQUIRE(assess_readiness(c, 4.0).kind == IncubationStatus::Kind::insufficient);
}

TEST_CASE("panel fails after the 16 hour horizon without a result", "[readiness]") {
  const LoessCurve c = redox_curve(0.05, 2.0, 1.0);
  REQUIRE(assess_readiness(c, 16.33).kind == IncubationStatus::Kind::failed);
  // in-band curves also fail once the horizon passes
  const LoessCurve c2 = redox_curve(0.15, 2.0, 1.0);
  REQUIRE(assess_readiness(c2, 16.5).kind == IncubationStatus::Kind::failed);
}

TEST_CASE("ready fires at the first grid time past the high threshold", "[readiness]") {
  // 0.2-crossing at t0 - ln(4)/rate = 4.9 h, so the 5.0 h grid sample is the
  // first one above threshold
  const double rate = 2.0;
  const double t0 = 4.9 + std::log(4.0) / rate;
  const LoessCurve c = redox_curve(1.0, rate, t0);
  const IncubationStatus s = assess_readiness(c, 16.0);
  REQUIRE(s.is_ready());
  REQUIRE(s.time_to_result == Catch::Approx(5.0).margin(1e-9));
  REQUIRE(s.growth_class == GrowthClass::fast);
}

TEST_CASE("slow growers cross after the fast cutoff", "[readiness]") {
  const double rate = 1.5;
  const double t0 = 10.4 + std::log(4.0) / rate;  // crossing ~10.4 h > 8 h cutoff
  const LoessCurve c = redox_curve(1.0, rate, t0);
  const IncubationStatus s = assess_readiness(c, 16.0);
  REQUIRE(s.is_ready());
  REQUIRE(s.growth_class == GrowthClass::slow);
}

TEST_CASE("ready is absorbing and failure is unreachable before the horizon",
          "[readiness][property]") {
  const ReadinessParams params;
  std::vector<LoessCurve> curves;
  for (double scale : {0.05, 0.15, 0.5, 1.0})
    for (double rate : {0.5, 1.0, 2.0})
      for (double t0 : {2.0, 6.0, 10.0, 15.0}) curves.push_back(redox_curve(scale, rate, t0));

  for (const LoessCurve& c : curves) {
    IncubationStatus first_ready;
    bool seen_ready = false;
    for (double elapsed = 1.0; elapsed <= 17.0; elapsed += 1.0 / 3.0) {
      const IncubationStatus s = assess_readiness(c, elapsed, params);
      if (s.is_ready()) {
        REQUIRE(s.time_to_result <= params.max_hours);
        REQUIRE(s.time_to_result <= elapsed + 1e-9);
        if (!seen_ready) {
          first_ready = s;
          seen_ready = true;
        } else {
          // monotone absorption: identical result at every later elapsed
          REQUIRE(s.time_to_result == first_ready.time_to_result);
          REQUIRE(s.growth_class == first_ready.growth_class);
        }
      } else {
        REQUIRE_FALSE(seen_ready);  // ready never reverts
        if (elapsed <= params.max_hours) {
          REQUIRE(s.kind != IncubationStatus::Kind::failed);
        } else {
          REQUIRE(s.kind == IncubationStatus::Kind::failed);
        }
      }
    }
  }
}
