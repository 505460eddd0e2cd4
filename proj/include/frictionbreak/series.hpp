#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "frictionbreak/date.hpp"

namespace frictionbreak {

/// The explicit missing marker. Any other non-finite value is rejected.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Values on a gap-free UTC daily grid starting at `start()`.
///
/// The grid is implied by the start date and the number of values, so the
/// one-day-step invariant holds by construction. Values may be kMissing.
class DailySeries {
 public:
  DailySeries() = default;
  /// Throws InputError if any value is infinite.
  DailySeries(Date start, std::vector<double> values);

  Date start() const { return start_; }
  /// Last date on the grid. Undefined for an empty series.
  Date end() const { return start_ + static_cast<std::int32_t>(values_.size()) - 1; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  Date date_at(std::size_t i) const { return start_ + static_cast<std::int32_t>(i); }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(Date d) const;  // kMissing outside the grid
  std::optional<std::size_t> index_of(Date d) const;

  std::span<const double> values() const { return values_; }
  std::size_t count_present() const;

  /// Restriction to [from, to]; both must lie on the grid.
  DailySeries slice(Date from, Date to) const;
  /// Same grid as `grid_start`/`n`: values outside this series become missing.
  DailySeries reindex(Date grid_start, std::size_t n) const;

  bool same_grid(const DailySeries& other) const {
    return start_ == other.start_ && values_.size() == other.values_.size();
  }

  friend bool operator==(const DailySeries& a, const DailySeries& b);

 private:
  Date start_{};
  std::vector<double> values_;
};

/// One raw observation: unix timestamp (seconds, UTC) and value.
struct TimedValue {
  std::int64_t timestamp = 0;
  double value = 0.0;
};

enum class Interpolation { kLinear, kPrevious };

/// Samples the points at each 00:00 UTC between the first and last point's dates.
/// Interior days are interpolated; days before the first or after the last
/// timestamp are missing (never extrapolated). Points need not be sorted.
DailySeries resample_daily(std::span<const TimedValue> points,
                           Interpolation policy = Interpolation::kLinear);

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). Missing values are ignored.
double quantile(std::span<const double> values, double p);

/// Clamps values above the empirical `percentile` quantile to that quantile.
DailySeries winsorize_upper(const DailySeries& series, double percentile);

struct RollingSpec {
  int window = 30;
  int min_periods = 30;
  void validate() const;
};

/// Trailing-window sample standard deviation (n - 1 denominator). A date is
/// missing when fewer than min_periods observations precede it (inclusive),
/// when the trailing window holds a missing value, or when it holds a single value.
DailySeries rolling_std(const DailySeries& series, const RollingSpec& spec);

enum class Direction { kBackward, kForward };

/// Percent change over `horizon` days. Forward: 100 (v[t+h] - v[t]) / v[t] at t.
/// Backward: 100 (v[t] - v[t-h]) / v[t-h] at t. Zero or missing base gives missing.
DailySeries pct_change(const DailySeries& series, int horizon, Direction direction);

/// value at t := value at t + offset (lead for positive offsets). Out-of-range is missing.
DailySeries shift(const DailySeries& series, int offset);

}  // namespace frictionbreak
