#include <doctest.h>

#include <set>

#include "frictionbreak/error.hpp"
#include "frictionbreak/synth.hpp"
#include "frictionbreak/threshold.hpp"
#include "oracles.hpp"

using namespace frictionbreak;

namespace {

// Root of (1 - exp(-x/2))^2 = c by bisection.
double bisect_critical(double c) {
  double lo = 0.0, hi = 200.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = std::pow(1.0 - std::exp(-mid / 2.0), 2.0);
    (f < c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct BruteFit {
  double gamma, ssr, mean1, mean2;
  std::vector<double> gammas, ssrs;
};

// Every distinct q inside the trimmed band with both regimes large enough,
// scored by a direct two-group SSR.
BruteFit brute_threshold(const std::vector<double>& y, const std::vector<double>& q, double trim, int min_regime) {
  const double lo = oracle::quantile7(q, trim), hi = oracle::quantile7(q, 1.0 - trim);
  const std::set<double> distinct(q.begin(), q.end());
  BruteFit best{0, INFINITY, 0, 0, {}, {}};
  for (double g : distinct) {
    if (g < lo || g > hi) continue;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < y.size(); ++i) (q[i] <= g ? a : b).push_back(y[i]);
    if (a.size() < static_cast<std::size_t>(min_regime) || b.size() < static_cast<std::size_t>(min_regime)) continue;
    const double ma = oracle::mean(a), mb = oracle::mean(b);
    long double s = 0.0L;
    for (double v : a) s += (v - ma) * (v - ma);
    for (double v : b) s += (v - mb) * (v - mb);
    best.gammas.push_back(g);
    best.ssrs.push_back(static_cast<double>(s));
    if (static_cast<double>(s) < best.ssr) best = {g, static_cast<double>(s), ma, mb, best.gammas, best.ssrs};
  }
  return best;
}

PanelDataset panel_from(const std::vector<double>& tci, const std::vector<double>& dv30, const std::vector<double>& fee,
                        const std::vector<double>& delay) {
  const Date d0 = Date::from_ymd(2020, 1, 1);
  PanelDataset p;
  p.start = d0;
  p.rows = tci.size();
  p.tci = DailySeries(d0, tci);
  p.dv30 = DailySeries(d0, dv30);
  p.avg_fee_usd = DailySeries(d0, fee);
  p.confirm_delay_min = DailySeries(d0, delay);
  return p;
}

}  // namespace

TEST_CASE("hansen_critical_value anchors, bisection oracle and round trip") {
  CHECK(hansen_critical_value(0.90) == doctest::Approx(5.94).epsilon(0.005 / 5.94));
  CHECK(hansen_critical_value(0.95) == doctest::Approx(7.35).epsilon(0.005 / 7.35));
  CHECK(hansen_critical_value(0.99) == doctest::Approx(10.59).epsilon(0.005 / 10.59));
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double c = k / 100.0;
    const double x = hansen_critical_value(c);
    CHECK(std::fabs(x - bisect_critical(c)) < 1e-9);
    CHECK(std::fabs(std::pow(1.0 - std::exp(-x / 2.0), 2.0) - c) < 1e-10);
    CHECK(x > prev);
    prev = x;
  }
  CHECK_THROWS_AS(hansen_critical_value(0.0), InputError);
  CHECK_THROWS_AS(hansen_critical_value(1.0), InputError);
}

TEST_CASE("estimate_threshold equals an exhaustive SSR search") {
  oracle::Lcg g(101);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 60 + 10 * trial;
    std::vector<double> y, q;
    for (int i = 0; i < n; ++i) {
      // Rounded q forces ties.
      q.push_back(std::round((g.u() + 0.5) * 40.0) / 10.0);
      y.push_back((q.back() <= 2.0 ? 5.0 : -3.0) + 4.0 * g.e());
    }
    const ThresholdFit f = estimate_threshold(y, q, {.trim = 0.1, .min_regime = 10});
    const BruteFit b = brute_threshold(y, q, 0.1, 10);
    REQUIRE(f.candidates == b.gammas);
    for (std::size_t c = 0; c < b.ssrs.size(); ++c) {
      CHECK(oracle::rel_diff(f.ssr_profile[c], b.ssrs[c]) < 1e-10);
      CHECK(f.ssr <= f.ssr_profile[c]);
      CHECK(f.lr_curve[c] >= 0.0);
    }
    CHECK(f.gamma_hat == b.gamma);
    CHECK(oracle::rel_diff(f.beta1, b.mean1) < 1e-12);
    CHECK(oracle::rel_diff(f.beta2, b.mean2) < 1e-12);
    CHECK(f.net_damage == f.beta2 - f.beta1);
    CHECK(f.n1 + f.n2 == static_cast<std::size_t>(n));
    CHECK(f.n1 >= 10);
    CHECK(f.n2 >= 10);
    const auto best = static_cast<std::size_t>(
        std::find(f.candidates.begin(), f.candidates.end(), f.gamma_hat) - f.candidates.begin());
    CHECK(f.lr_curve[best] == 0.0);
    for (std::size_t c = 0; c < f.lr_curve.size(); ++c) {
      if (c != best) CHECK(f.lr_curve[c] > 0.0);
      const bool inside = f.lr_curve[c] <= f.critical_value;
      CHECK(inside == std::binary_search(f.conf_region.begin(), f.conf_region.end(), f.candidates[c]));
    }
  }
}

TEST_CASE("estimate_threshold breaks ties toward the smallest gamma") {
  // Symmetric data where two cuts give the same SSR.
  std::vector<double> q, y;
  for (int i = 0; i < 30; ++i) {
    q.push_back(i);
    y.push_back(i < 10 ? 0.0 : (i < 20 ? 1.0 : 0.0));
  }
  const ThresholdFit f = estimate_threshold(y, q, {.trim = 0.0, .min_regime = 5});
  const BruteFit b = brute_threshold(y, q, 0.0, 5);
  CHECK(f.gamma_hat == b.gamma);
  for (std::size_t c = 0; c < f.candidates.size(); ++c)
    if (f.candidates[c] < f.gamma_hat) CHECK(f.ssr_profile[c] > f.ssr);
}

TEST_CASE("estimate_threshold recovers the headline-parameter DGP") {
  DgpSpec spec;
  spec.n = 2000;
  spec.sigma = 2.0;
  spec.seed = 4;
  const ThresholdSample s = gen_threshold_dgp(spec);
  const ThresholdFit f = estimate_threshold(s.y, s.q);
  // One candidate step: gamma_hat is adjacent to 1.63 among the sorted candidates.
  const auto above = std::upper_bound(f.candidates.begin(), f.candidates.end(), spec.gamma_true);
  REQUIRE(above != f.candidates.begin());
  const double below_truth = *(above - 1);
  const double above_truth = above == f.candidates.end() ? below_truth : *above;
  CHECK(f.gamma_hat >= below_truth);
  CHECK(f.gamma_hat <= above_truth);
  CHECK(f.net_damage == doctest::Approx(-9.39).epsilon(1.5 / 9.39));
}

TEST_CASE("estimate_threshold is invariant to monotone transforms of q") {
  DgpSpec spec;
  spec.n = 500;
  spec.seed = 9;
  const ThresholdSample s = gen_threshold_dgp(spec);
  const ThresholdFit base = estimate_threshold(s.y, s.q);
  std::vector<double> lq;
  for (double v : s.q) lq.push_back(std::log(v));
  const ThresholdFit t = estimate_threshold(s.y, lq);
  CHECK(t.gamma_hat == doctest::Approx(std::log(base.gamma_hat)).epsilon(1e-15));
  CHECK(t.n1 == base.n1);
  CHECK(t.ssr == base.ssr);
}

TEST_CASE("estimate_threshold under the null keeps a wide confidence region") {
  DgpSpec spec;
  spec.n = 1000;
  spec.mu2 = spec.mu1;
  spec.seed = 2;
  const ThresholdSample s = gen_threshold_dgp(spec);
  const ThresholdFit f = estimate_threshold(s.y, s.q);
  CHECK(f.conf_region.size() > f.candidates.size() / 2);
  for (double lr : f.lr_curve) CHECK(lr < 20.0);
}

TEST_CASE("estimate_threshold input errors") {
  const std::vector<double> y(50, 1.0), q(50, 2.0);
  CHECK_THROWS_AS(estimate_threshold(y, q), InputError);
  std::vector<double> q2;
  for (int i = 0; i < 15; ++i) q2.push_back(i);
  CHECK_THROWS_AS(estimate_threshold(std::vector<double>(15, 0.0), q2, {.trim = 0.05, .min_regime = 10}),
                  DegenerateError);
  CHECK_THROWS_AS(estimate_threshold(y, std::vector<double>(49, 1.0)), InputError);
  CHECK_THROWS_AS(estimate_threshold(y, q, {.trim = 0.6}), InputError);
}

TEST_CASE("sup_wald_test power, replicate determinism and errors") {
  DgpSpec spec;
  spec.n = 800;
  spec.sigma = 10.0;
  spec.seed = 11;
  const ThresholdSample s = gen_threshold_dgp(spec);
  const SupWaldResult r = sup_wald_test(s.y, s.q, {}, 199, 5);
  CHECK(r.p_value < 0.01);
  CHECK(r.boot_statistics.size() == 199);
  const SupWaldResult again = sup_wald_test(s.y, s.q, {}, 199, 5, 3);
  CHECK(again.boot_statistics == r.boot_statistics);
  CHECK(again.statistic == r.statistic);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK_THROWS_AS(sup_wald_test(s.y, s.q, {}, 0, 5), InputError);

  // The statistic at the sup equals the HC Wald formula evaluated directly.
  std::vector<double> a, b;
  for (std::size_t i = 0; i < s.y.size(); ++i) (s.q[i] <= r.gamma_at_sup ? a : b).push_back(s.y[i]);
  const double ma = oracle::mean(a), mb = oracle::mean(b);
  long double va = 0, vb = 0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  const double w = (mb - ma) * (mb - ma) /
                   static_cast<double>(va / (a.size() * static_cast<long double>(a.size())) +
                                       vb / (b.size() * static_cast<long double>(b.size())));
  CHECK(oracle::rel_diff(r.statistic, w) < 1e-9);
}

TEST_CASE("regime_stats matches a group-by oracle") {
  oracle::Lcg g(13);
  std::vector<double> tci, dv, fee, delay;
  for (int i = 0; i < 300; ++i) {
    tci.push_back(std::exp(g.e()));
    dv.push_back(tci.back() > 1.5 ? -5.0 + 10.0 * g.e() : 8.0 + 10.0 * g.e());
    fee.push_back(2.0 + g.e());
    delay.push_back(9.0 + g.e());
  }
  dv[7] = kMissing;
  const PanelDataset p = panel_from(tci, dv, fee, delay);
  const RegimeSummary s = regime_stats(p, 1.5);
  std::vector<double> dn, ds, fn, fs, tn, ts, ln, ls;
  for (int i = 0; i < 300; ++i) {
    if (is_missing(dv[i])) continue;
    const bool shock = tci[i] > 1.5;
    (shock ? ds : dn).push_back(dv[i]);
    (shock ? fs : fn).push_back(fee[i]);
    (shock ? ts : tn).push_back(tci[i]);
    (shock ? ls : ln).push_back(delay[i]);
  }
  CHECK(s.n_normal == dn.size());
  CHECK(s.n_shock == ds.size());
  CHECK(oracle::rel_diff(s.dv30.normal, oracle::mean(dn)) < 1e-12);
  CHECK(oracle::rel_diff(s.dv30.shock, oracle::mean(ds)) < 1e-12);
  CHECK(oracle::rel_diff(s.avg_fee.normal, oracle::mean(fn)) < 1e-12);
  CHECK(oracle::rel_diff(s.avg_fee.shock, oracle::mean(fs)) < 1e-12);
  CHECK(oracle::rel_diff(s.tci.ratio, oracle::mean(ts) / oracle::mean(tn)) < 1e-12);
  CHECK(oracle::rel_diff(s.delay.delta, oracle::mean(ls) - oracle::mean(ln)) < 1e-12);
  CHECK(s.net_damage == s.dv30.delta);
  CHECK(s.welch.statistic == welch_t(dn, ds).statistic);

  CHECK_THROWS_AS(regime_stats(p, 1e9), DegenerateError);
}

TEST_CASE("regime_stats with identical regime distributions") {
  std::vector<double> tci, dv, fee, delay;
  for (int i = 0; i < 40; ++i) {
    tci.push_back(i);
    dv.push_back(static_cast<double>(i % 5));
    fee.push_back(1.0);
    delay.push_back(10.0);
  }
  const RegimeSummary s = regime_stats(panel_from(tci, dv, fee, delay), 19.0);
  CHECK(s.net_damage == 0.0);
  CHECK(s.welch.p_value == doctest::Approx(1.0));
}

TEST_CASE("sensitivity_sweep") {
  DgpSpec spec;
  spec.n = 1500;
  spec.sigma = 2.0;
  spec.seed = 21;
  const ThresholdSample s = gen_threshold_dgp(spec);
  const PanelDataset p = panel_from(s.q, s.y, std::vector<double>(s.q.size(), 1.0), std::vector<double>(s.q.size(), 1.0));

  const std::vector<double> one{0.8};
  const auto single = sensitivity_sweep(p, one);
  REQUIRE(single.size() == 1);
  const RegimeSummary at = regime_stats(p, oracle::quantile7(s.q, 0.8));
  CHECK(single[0].gamma == oracle::quantile7(s.q, 0.8));
  CHECK(single[0].net_damage == at.net_damage);
  CHECK(single[0].p_value == at.welch.p_value);

  std::vector<double> pct;
  for (int k = 60; k <= 99; ++k) pct.push_back(k / 100.0);
  const auto rows = sensitivity_sweep(p, pct);
  const double true_pct = spec.q_law.cdf(spec.gamma_true);
  const auto best = std::max_element(rows.begin(), rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) { return std::fabs(a.net_damage) < std::fabs(b.net_damage); });
  CHECK(std::fabs(best->percentile - true_pct) <= 0.05);

  const std::vector<double> extreme{0.999};
  CHECK_THROWS_AS(sensitivity_sweep(p, extreme), DegenerateError);
}
