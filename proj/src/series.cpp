#include "frictionbreak/series.hpp"

#include <algorithm>
#include <string>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

DailySeries::DailySeries(Date start, std::vector<double> values)
    : start_(start), values_(std::move(values)) {
  for (double v : values_)
    if (std::isinf(v)) throw InputError("DailySeries: infinite value");
}

double DailySeries::at(Date d) const {
  const auto i = index_of(d);
  return i ? values_[*i] : kMissing;
}

std::optional<std::size_t> DailySeries::index_of(Date d) const {
  const std::int32_t off = d - start_;
  if (off < 0 || static_cast<std::size_t>(off) >= values_.size()) return std::nullopt;
  return static_cast<std::size_t>(off);
}

std::size_t DailySeries::count_present() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return !is_missing(v); }));
}

DailySeries DailySeries::slice(Date from, Date to) const {
  const auto a = index_of(from);
  const auto b = index_of(to);
  if (!a || !b || *a > *b) throw InputError("DailySeries::slice: range outside grid");
  return DailySeries(from, std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(*a),
                                               values_.begin() + static_cast<std::ptrdiff_t>(*b) + 1));
}

DailySeries DailySeries::reindex(Date grid_start, std::size_t n) const {
  std::vector<double> out(n, kMissing);
  for (std::size_t i = 0; i < n; ++i) out[i] = at(grid_start + static_cast<std::int32_t>(i));
  return DailySeries(grid_start, std::move(out));
}

bool operator==(const DailySeries& a, const DailySeries& b) {
  if (!a.same_grid(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    if (is_missing(x) != is_missing(y)) return false;
    if (!is_missing(x) && x != y) return false;
  }
  return true;
}

DailySeries resample_daily(std::span<const TimedValue> points, Interpolation policy) {
  if (points.empty()) throw InputError("resample_daily: empty input");
  std::vector<TimedValue> pts(points.begin(), points.end());
  for (const auto& p : pts)
    if (!std::isfinite(p.value)) throw InputError("resample_daily: non-finite value");
  std::stable_sort(pts.begin(), pts.end(),
                   [](const TimedValue& a, const TimedValue& b) { return a.timestamp < b.timestamp; });
  // Collapse exact duplicates; conflicting duplicates are an error.
  std::vector<TimedValue> uniq;
  uniq.reserve(pts.size());
  for (const auto& p : pts) {
    if (!uniq.empty() && uniq.back().timestamp == p.timestamp) {
      if (uniq.back().value != p.value)
        throw InputError("resample_daily: duplicate timestamp " + std::to_string(p.timestamp) +
                         " with conflicting values");
      continue;
    }
    uniq.push_back(p);
  }

  const Date first = Date::from_epoch_seconds(uniq.front().timestamp);
  const Date last = Date::from_epoch_seconds(uniq.back().timestamp);
  const auto n = static_cast<std::size_t>(last - first) + 1;
  std::vector<double> out(n, kMissing);

  std::size_t j = 0;  // uniq[j].timestamp <= t < uniq[j+1].timestamp
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = (first + static_cast<std::int32_t>(i)).epoch_seconds();
    if (t < uniq.front().timestamp || t > uniq.back().timestamp) continue;
    while (j + 1 < uniq.size() && uniq[j + 1].timestamp <= t) ++j;
    const TimedValue& a = uniq[j];
    if (a.timestamp == t || j + 1 == uniq.size()) {
      out[i] = a.value;
      continue;
    }
    const TimedValue& b = uniq[j + 1];
    if (policy == Interpolation::kPrevious) {
      out[i] = a.value;
    } else {
      const double w = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
      out[i] = a.value + w * (b.value - a.value);
    }
  }
  return DailySeries(first, std::move(out));
}

double quantile(std::span<const double> values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile: probability outside [0, 1]");
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!is_missing(x)) v.push_back(x);
  if (v.empty()) throw InputError("quantile: no non-missing values");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DailySeries winsorize_upper(const DailySeries& series, double percentile) {
  if (!(percentile > 0.0 && percentile <= 1.0))
    throw InputError("winsorize_upper: percentile outside (0, 1]");
  if (series.count_present() == 0) throw InputError("winsorize_upper: no non-missing values");
  const double cap = quantile(series.values(), percentile);
  std::vector<double> out(series.values().begin(), series.values().end());
  for (double& v : out)
    if (!is_missing(v) && v > cap) v = cap;
  return DailySeries(series.start(), std::move(out));
}

void RollingSpec::validate() const {
  if (window < 1 || min_periods < 1 || min_periods > window)
    throw InputError("RollingSpec: require window >= 1 and 1 <= min_periods <= window");
}

DailySeries rolling_std(const DailySeries& series, const RollingSpec& spec) {
  spec.validate();
  if (static_cast<std::size_t>(spec.window) > series.size())
    throw InputError("rolling_std: window longer than series");
  const auto vals = series.values();
  const auto w = static_cast<std::size_t>(spec.window);
  std::vector<double> out(vals.size(), kMissing);
  for (std::size_t t = 0; t < vals.size(); ++t) {
    const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
    const std::size_t count = t + 1 - lo;
    if (count < static_cast<std::size_t>(spec.min_periods) || count < 2) continue;
    double mean = 0.0;
    bool gap = false;
    for (std::size_t k = lo; k <= t; ++k) {
      if (is_missing(vals[k])) {
        gap = true;
        break;
      }
      mean += vals[k];
    }
    if (gap) continue;
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t k = lo; k <= t; ++k) ss += (vals[k] - mean) * (vals[k] - mean);
    out[t] = std::sqrt(ss / static_cast<double>(count - 1));
  }
  return DailySeries(series.start(), std::move(out));
}

DailySeries pct_change(const DailySeries& series, int horizon, Direction direction) {
  if (horizon < 1) throw InputError("pct_change: horizon must be positive");
  if (static_cast<std::size_t>(horizon) >= series.size())
    throw InputError("pct_change: horizon not shorter than series");
  const auto vals = series.values();
  const auto h = static_cast<std::size_t>(horizon);
  std::vector<double> out(vals.size(), kMissing);
  auto change = [](double base, double next) {
    if (is_missing(base) || is_missing(next) || base == 0.0) return kMissing;
    return 100.0 * (next - base) / base;
  };
  for (std::size_t t = 0; t < vals.size(); ++t) {
    if (direction == Direction::kForward) {
      if (t + h < vals.size()) out[t] = change(vals[t], vals[t + h]);
    } else if (t >= h) {
      out[t] = change(vals[t - h], vals[t]);
    }
  }
  return DailySeries(series.start(), std::move(out));
}

DailySeries shift(const DailySeries& series, int offset) {
  std::vector<double> out(series.size(), kMissing);
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto src = static_cast<std::ptrdiff_t>(t) + offset;
    if (src >= 0 && static_cast<std::size_t>(src) < series.size()) out[t] = series[static_cast<std::size_t>(src)];
  }
  return DailySeries(series.start(), std::move(out));
}

}  // namespace frictionbreak
