#include <doctest.h>

#include "frictionbreak/date.hpp"
#include "frictionbreak/error.hpp"
#include "frictionbreak/series.hpp"
#include "oracles.hpp"

using namespace frictionbreak;

namespace {

DailySeries make(std::vector<double> v, Date start = Date::from_ymd(2021, 1, 1)) {
  return DailySeries(start, std::move(v));
}

// Per-day linear interpolation by scanning every pair of neighbours.
std::vector<double> naive_resample(std::vector<TimedValue> pts) {
  std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
  const std::int64_t d0 = pts.front().timestamp / 86400;
  const std::int64_t d1 = pts.back().timestamp / 86400;
  std::vector<double> out;
  for (std::int64_t d = d0; d <= d1; ++d) {
    const std::int64_t t = d * 86400;
    double v = kMissing;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].timestamp == t) v = pts[i].value;
      if (i + 1 < pts.size() && pts[i].timestamp < t && t < pts[i + 1].timestamp) {
        const long double frac = static_cast<long double>(t - pts[i].timestamp) /
                                 static_cast<long double>(pts[i + 1].timestamp - pts[i].timestamp);
        v = static_cast<double>(pts[i].value + frac * (pts[i + 1].value - pts[i].value));
      }
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("date arithmetic and ISO round trip") {
  const Date d = Date::from_ymd(2024, 2, 29);
  CHECK(d.to_string() == "2024-02-29");
  CHECK(Date::parse("2024-02-29") == d);
  CHECK((d + 1).to_string() == "2024-03-01");
  CHECK(Date::from_ymd(1970, 1, 1).days_since_epoch() == 0);
  CHECK(Date::from_epoch_seconds(-1) == Date(-1));
  CHECK_THROWS_AS(Date::parse("2024-13-01"), InputError);
  CHECK_THROWS_AS(Date::parse("20240101"), InputError);
}

TEST_CASE("timestamp encodings agree") {
  const std::int64_t day = Date::from_ymd(2021, 1, 2).epoch_seconds();
  CHECK(parse_timestamp("2021-01-02") == day);
  CHECK(parse_timestamp("2021-01-02T00:00:00Z") == day);
  CHECK(parse_timestamp("2021-01-02 00:00") == day);
  CHECK(parse_timestamp(std::to_string(day)) == day);
  CHECK(parse_timestamp("2021-01-02T06:30:15.250Z") == day + 6 * 3600 + 30 * 60 + 15);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), InputError);
}

TEST_CASE("DailySeries rejects infinities but keeps the missing marker") {
  CHECK_THROWS_AS(make({1.0, INFINITY}), InputError);
  const DailySeries s = make({1.0, kMissing, 3.0});
  CHECK(s.count_present() == 2);
  CHECK(is_missing(s.at(s.start() - 1)));
  CHECK(s.end() == s.start() + 2);
}

TEST_CASE("resample_daily fills interior days linearly") {
  const std::int64_t d0 = Date::from_ymd(2021, 1, 1).epoch_seconds();
  const std::vector<TimedValue> pts{{d0, 10.0}, {d0 + 2 * 86400, 30.0}};
  const DailySeries s = resample_daily(pts);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 10.0);
  CHECK(s[1] == 20.0);
  CHECK(s[2] == 30.0);

  const std::vector<TimedValue> daily{{d0, 5.0}, {d0 + 86400, 5.0}};
  const DailySeries same = resample_daily(daily);
  CHECK(same == make({5.0, 5.0}));
}

TEST_CASE("resample_daily is idempotent on daily input") {
  const std::int64_t d0 = Date::from_ymd(2020, 6, 1).epoch_seconds();
  oracle::Lcg g(5);
  std::vector<TimedValue> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({d0 + i * 86400, g.e()});
  const DailySeries once = resample_daily(pts);
  std::vector<TimedValue> again;
  for (std::size_t i = 0; i < once.size(); ++i) again.push_back({once.date_at(i).epoch_seconds(), once[i]});
  CHECK(resample_daily(again) == once);
}

TEST_CASE("resample_daily matches a naive interpolation loop on random gaps") {
  oracle::Lcg g(77);
  std::vector<TimedValue> pts;
  std::int64_t t = Date::from_ymd(2019, 3, 4).epoch_seconds() + 3600 * 7;
  for (int i = 0; i < 100; ++i) {
    pts.push_back({t, 100.0 * g.e()});
    t += static_cast<std::int64_t>((g.u() + 0.5) * 5.0 * 86400.0) + 1;
  }
  std::vector<TimedValue> shuffled(pts.rbegin(), pts.rend());
  const DailySeries s = resample_daily(shuffled);
  const std::vector<double> ref = naive_resample(pts);
  REQUIRE(s.size() == ref.size());
  CHECK(is_missing(s[0]));  // first point lies after midnight of its day
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(is_missing(s[i]) == is_missing(ref[i]));
    if (!is_missing(ref[i])) CHECK(oracle::rel_diff(s[i], ref[i]) < 1e-12);
  }
}

TEST_CASE("resample_daily previous-value policy and duplicate handling") {
  const std::int64_t d0 = Date::from_ymd(2021, 1, 1).epoch_seconds();
  const std::vector<TimedValue> pts{{d0, 1.0}, {d0 + 3 * 86400, 4.0}};
  const DailySeries s = resample_daily(pts, Interpolation::kPrevious);
  CHECK(s == make({1.0, 1.0, 1.0, 4.0}));

  const std::vector<TimedValue> dup_ok{{d0, 1.0}, {d0, 1.0}, {d0 + 86400, 2.0}};
  CHECK(resample_daily(dup_ok).size() == 2);
  const std::vector<TimedValue> dup_bad{{d0, 1.0}, {d0, 2.0}};
  CHECK_THROWS_AS(resample_daily(dup_bad), InputError);
  CHECK_THROWS_AS(resample_daily(std::vector<TimedValue>{}), InputError);
}

TEST_CASE("quantile uses type 7 interpolation") {
  oracle::Lcg g(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 1 + trial * 3; ++i) v.push_back(g.e());
    for (double p : {0.0, 0.1, 0.25, 0.5, 0.9, 0.99, 1.0}) CHECK(quantile(v, p) == oracle::quantile7(v, p));
  }
  const std::vector<double> with_gap{1.0, kMissing, 3.0};
  CHECK(quantile(with_gap, 0.5) == 2.0);
}

TEST_CASE("winsorize_upper clamps above the quantile") {
  const DailySeries s = make({1.0, 2.0, 3.0, 1000.0});
  const double q = oracle::quantile7({1.0, 2.0, 3.0, 1000.0}, 0.75);
  CHECK(q == doctest::Approx(252.25));
  CHECK(winsorize_upper(s, 0.75) == make({1.0, 2.0, 3.0, q}));
  CHECK(winsorize_upper(s, 1.0) == s);
  CHECK(winsorize_upper(make({4.0, 4.0, 4.0}), 0.5) == make({4.0, 4.0, 4.0}));
  CHECK_THROWS_AS(winsorize_upper(s, 0.0), InputError);
  CHECK_THROWS_AS(winsorize_upper(s, 1.5), InputError);
  CHECK_THROWS_AS(winsorize_upper(make({kMissing}), 0.5), InputError);
}

TEST_CASE("winsorize_upper never raises a value and keeps the lower order statistics") {
  oracle::Lcg g(11);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i % 17 == 0 ? kMissing : std::exp(3.0 * g.e()));
  const DailySeries s = make(v);
  const DailySeries w = winsorize_upper(s, 0.9);
  std::vector<double> present;
  for (double x : v)
    if (!is_missing(x)) present.push_back(x);
  const double cap = oracle::quantile7(present, 0.9);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (is_missing(v[i])) {
      CHECK(is_missing(w[i]));
      continue;
    }
    CHECK(w[i] <= v[i]);
    CHECK(w[i] == (v[i] > cap ? cap : v[i]));
  }
}

TEST_CASE("rolling_std basics") {
  const DailySeries c = make(std::vector<double>(10, 3.0));
  const DailySeries r = rolling_std(c, {4, 4});
  for (std::size_t i = 0; i < 3; ++i) CHECK(is_missing(r[i]));
  for (std::size_t i = 3; i < 10; ++i) CHECK(r[i] == 0.0);

  std::vector<double> alt;
  for (int i = 0; i < 12; ++i) alt.push_back(i % 2 ? 2.0 : 0.0);
  const DailySeries a = rolling_std(make(alt), {2, 2});
  CHECK(is_missing(a[0]));
  for (std::size_t i = 1; i < 12; ++i) CHECK(a[i] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  CHECK_THROWS_AS(rolling_std(make({1.0, 2.0}), {3, 3}), InputError);
  CHECK_THROWS_AS(rolling_std(make({1.0, 2.0}), {2, 3}), InputError);
  CHECK_THROWS_AS(rolling_std(make({1.0, 2.0}), {0, 0}), InputError);
}

TEST_CASE("rolling_std matches a naive per-window recomputation on 1000 days") {
  oracle::Lcg g(2024);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(50.0 + 20.0 * g.e());
  v[400] = kMissing;
  const DailySeries s = make(v);
  for (const RollingSpec spec : {RollingSpec{30, 30}, RollingSpec{30, 10}, RollingSpec{7, 2}}) {
    const DailySeries r = rolling_std(s, spec);
    for (std::size_t t = 0; t < v.size(); ++t) {
      const std::size_t lo = t + 1 >= static_cast<std::size_t>(spec.window) ? t + 1 - spec.window : 0;
      std::vector<double> win(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(t) + 1);
      const bool gap = std::any_of(win.begin(), win.end(), [](double x) { return is_missing(x); });
      const bool defined = !gap && win.size() >= static_cast<std::size_t>(spec.min_periods) && win.size() >= 2;
      REQUIRE(is_missing(r[t]) == !defined);
      if (defined) {
        CHECK(r[t] >= 0.0);
        CHECK(oracle::rel_diff(r[t], oracle::sample_sd(win)) < 1e-10);
      }
    }
  }
}

TEST_CASE("pct_change directions, zero bases and alignment") {
  const DailySeries s = make({100.0, 105.0, 110.0, 0.0, 50.0});
  const DailySeries f = pct_change(s, 2, Direction::kForward);
  CHECK(f[0] == doctest::Approx(10.0));
  CHECK(f[1] == doctest::Approx(-100.0));
  CHECK(is_missing(f[3]));  // zero base
  CHECK(is_missing(f[4]));
  const DailySeries b = pct_change(s, 2, Direction::kBackward);
  CHECK(is_missing(b[0]));
  CHECK(b[2] == doctest::Approx(10.0));
  CHECK(is_missing(b[4]) == false);
  CHECK(b[4] == doctest::Approx(100.0 * (50.0 - 110.0) / 110.0));
  CHECK(pct_change(make(std::vector<double>(5, 7.0)), 1, Direction::kForward)[0] == 0.0);
  CHECK_THROWS_AS(pct_change(s, 5, Direction::kForward), InputError);
  CHECK_THROWS_AS(pct_change(s, 0, Direction::kForward), InputError);

  oracle::Lcg g(8);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(10.0 + g.e());
  const DailySeries r = make(v);
  const DailySeries fw = pct_change(r, 30, Direction::kForward);
  const DailySeries bw = pct_change(r, 30, Direction::kBackward);
  for (std::size_t t = 0; t + 30 < v.size(); ++t) CHECK(fw[t] == bw[t + 30]);
}

TEST_CASE("shift leads and lags") {
  const DailySeries s = make({1.0, 2.0, 3.0});
  CHECK(shift(s, 1) == make({2.0, 3.0, kMissing}));
  CHECK(shift(s, -1) == make({kMissing, 1.0, 2.0}));
}
