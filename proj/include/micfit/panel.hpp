#pragma once
// Panel data model: a two-fold dilution series of wells, each carrying
// turbidity and redox time series, plus a drug-free growth-control well and
// the reference MIC for the isolate/drug combination.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace micfit {

constexpr double kMaxTurbidity = 2.25;  // McFarland units
constexpr double kMaxRedox = 1.0;       // fully reduced indicator

struct Series {
  std::vector<double> time;  // hours, strictly increasing
  std::vector<double> value;
};

// Dilution concentrations in ug/mL, strictly increasing, each 2x the last.
struct DilutionGrid {
  std::vector<double> concentrations;

  int size() const { return static_cast<int>(concentrations.size()); }

  void validate() const {
    if (concentrations.empty()) throw std::invalid_argument("dilution grid is empty");
    for (std::size_t i = 0; i + 1 < concentrations.size(); ++i) {
      if (!(concentrations[i] > 0.0))
        throw std::invalid_argument("dilution concentrations must be positive");
      const double ratio = concentrations[i + 1] / concentrations[i];
      if (std::abs(ratio - 2.0) > 1e-9)
        throw std::invalid_argument("dilutions must form a two-fold series");
    }
    if (!(concentrations.back() > 0.0))
      throw std::invalid_argument("dilution concentrations must be positive");
  }

  // 1-based index of a concentration on the grid; throws if absent.
  int index_of(double concentration) const {
    for (std::size_t i = 0; i < concentrations.size(); ++i) {
      if (std::abs(concentrations[i] - concentration) <=
          1e-9 * std::max(1.0, std::abs(concentration)))
        return static_cast<int>(i) + 1;
    }
    throw std::invalid_argument("concentration is not on the dilution grid");
  }

  static DilutionGrid two_fold(double lowest, int count) {
    DilutionGrid g;
    double c = lowest;
    for (int i = 0; i < count; ++i, c *= 2.0) g.concentrations.push_back(c);
    return g;
  }

  // The cefoxitin series 2^-1..2^5 (J = 7).
  static DilutionGrid fox() { return two_fold(0.5, 7); }
  // The piperacillin series 2^-2..2^7 (J = 10).
  static DilutionGrid pip() { return two_fold(0.25, 10); }
};

// Reference MIC: a concentration on the grid, or "above the top dilution".
struct RefMic {
  double concentration = 0.0;  // meaningful only when !above_grid
  bool above_grid = false;

  static RefMic at(double c) { return RefMic{c, false}; }
  static RefMic above() { return RefMic{0.0, true}; }

  // MIC bin index: j means D_{j-1} < MIC <= D_j, with J+1 meaning MIC > D_J.
  int bin_index(const DilutionGrid& grid) const {
    if (above_grid) return grid.size() + 1;
    return grid.index_of(concentration);
  }

  bool operator==(const RefMic& o) const {
    if (above_grid != o.above_grid) return false;
    return above_grid || concentration == o.concentration;
  }
};

struct Well {
  double dilution = 0.0;  // ug/mL; 0 for the control well
  Series turbidity;
  Series redox;
};

struct RawPanel {
  int id = 0;
  RefMic reference_mic;
  Well control;             // always drug-free, dilution 0
  std::vector<Well> wells;  // sorted by increasing dilution

  void validate() const {
    if (control.turbidity.time.empty())
      throw std::invalid_argument("panel " + std::to_string(id) + ": missing control well");
    for (std::size_t i = 0; i + 1 < wells.size(); ++i) {
      if (!(wells[i].dilution < wells[i + 1].dilution))
        throw std::invalid_argument("panel " + std::to_string(id) +
                                    ": wells not sorted by dilution");
    }
    auto check_series = [this](const Series& s, double lo, double hi, const char* what) {
      if (s.time.size() != s.value.size())
        throw std::invalid_argument("panel " + std::to_string(id) + ": ragged series");
      for (std::size_t i = 0; i < s.value.size(); ++i) {
        if (i + 1 < s.time.size() && !(s.time[i] < s.time[i + 1]))
          throw std::invalid_argument("panel " + std::to_string(id) +
                                      ": series times not increasing");
        if (s.value[i] < lo - 1e-12 || s.value[i] > hi + 1e-12)
          throw std::invalid_argument("panel " + std::to_string(id) + ": " + what +
                                      " out of range");
      }
    };
    check_series(control.turbidity, 0.0, kMaxTurbidity, "turbidity");
    check_series(control.redox, 0.0, kMaxRedox, "redox");
    for (const Well& w : wells) {
      check_series(w.turbidity, 0.0, kMaxTurbidity, "turbidity");
      check_series(w.redox, 0.0, kMaxRedox, "redox");
      if (w.turbidity.time != control.turbidity.time || w.redox.time != w.turbidity.time)
        throw std::invalid_argument("panel " + std::to_string(id) +
                                    ": wells do not share the control's time grid");
    }
    if (control.redox.time != control.turbidity.time)
      throw std::invalid_argument("panel " + std::to_string(id) +
                                  ": control series disagree on the time grid");
  }
};

}  // namespace micfit
