#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "frictionbreak/series.hpp"

namespace frictionbreak {

enum class Quadrant { kBoom = 0, kSpeculation = 1, kStagflation = 2, kCapitulation = 3 };
inline constexpr std::array<Quadrant, 4> kQuadrants = {Quadrant::kBoom, Quadrant::kSpeculation,
                                                       Quadrant::kStagflation, Quadrant::kCapitulation};
std::string_view to_string(Quadrant q);

/// (P>0, U>0) boom; (P>0, U<=0) speculation; (P<=0, U<=0) stagflation; (P<=0, U>0) capitulation.
Quadrant classify_quadrant(double price_momentum, double utility_momentum);

/// 1 where tci > gamma, 0 where tci <= gamma, missing where tci is missing.
DailySeries shock_mask(const DailySeries& tci, double gamma);

struct QuadrantSummary {
  std::vector<std::optional<Quadrant>> labels;  // one per date of price_mom
  std::array<double, 4> shares{};               // indexed by Quadrant
  std::array<std::size_t, 4> counts{};
  std::size_t classified = 0;
  std::size_t excluded = 0;                     // dates with a missing momentum
  double shock_stagflation_risk = kMissing;     // stagflation share of shock-regime dates
  std::size_t shock_days = 0;
};

/// `shock` is an optional mask from shock_mask on the same grid.
QuadrantSummary classify_quadrants(const DailySeries& price_mom, const DailySeries& util_mom,
                                   const DailySeries* shock = nullptr);

enum class VelocityImpact {
  kStartToEnd,  // 100 (V_end - V_start) / V_start
  kTrough,      // 100 (min V over the event - V_start) / V_start
  kPost30,      // 100 (V_{end+30} - V_start) / V_start
};

struct EventRecord {
  Date start{}, end{};
  int duration = 0;  // end - start + 1
  double peak_tci = 0.0;
  double avg_fee = kMissing;
  double velocity_impact = kMissing;
  std::optional<Quadrant> quadrant;  // modal label over the event, ties to the lower enum value
};

struct EventInputs {
  const DailySeries* tci = nullptr;       // required
  const DailySeries* velocity = nullptr;  // required
  const DailySeries* avg_fee = nullptr;   // optional
  const std::vector<std::optional<Quadrant>>* quadrants = nullptr;  // optional, aligned with tci
};

/// Maximal runs of days with tci > threshold; runs separated by at most
/// `merge_gap` non-exceedance days are merged into one event.
std::vector<EventRecord> extract_events(const EventInputs& inputs, double threshold, int merge_gap = 2,
                                        VelocityImpact impact = VelocityImpact::kStartToEnd);

struct Hysteresis {
  double h = kMissing;
  double counterfactual = 0.0;  // pre-event mean velocity
  double numerator = 0.0;       // long-run mean - counterfactual
  double denominator = 0.0;     // sum over the event of (V - counterfactual)
  bool degenerate = false;      // zero denominator
};

/// Long-run change over cumulative in-event deviation from the pre-event mean.
/// The long run is the mean over the last `tail_window` days ending `longrun_horizon` days after the event.
Hysteresis hysteresis_degree(const DailySeries& velocity, const EventRecord& event, int longrun_horizon = 90,
                             int pre_window = 30, int tail_window = 30);

struct ExclusionCensus {
  std::size_t days = 0;
  double share = 0.0;                // of dates with defined zeta
  std::optional<double> peak;        // max zeta over exclusion days
};

ExclusionCensus exclusion_census(const DailySeries& zeta, double threshold_pct = 0.05);

/// 100 (mean Z over shock - mean Z over normal) / mean Z over normal, Z = realized cap / UTXO count.
double concentration_delta(const DailySeries& realized_cap, const DailySeries& utxo_count,
                           const DailySeries& shock);

/// Trailing z-score of volume minus trailing z-score of UTXO count over `z_window` days.
DailySeries whale_divergence(const DailySeries& volume, const DailySeries& utxo_count, int z_window = 90);

}  // namespace frictionbreak
