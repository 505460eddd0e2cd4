#include "frictionbreak/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "frictionbreak/error.hpp"
#include "frictionbreak/parallel.hpp"
#include "frictionbreak/rng.hpp"

namespace frictionbreak {

double hansen_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InputError("hansen_critical_value: confidence outside (0, 1)");
  return -2.0 * std::log1p(-std::sqrt(confidence));
}

void ThresholdOptions::validate() const {
  if (!(trim >= 0.0 && trim < 0.5)) throw InputError("ThresholdOptions: trim outside [0, 0.5)");
  if (min_regime < 2) throw InputError("ThresholdOptions: min_regime must be >= 2");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("ThresholdOptions: confidence outside (0, 1)");
}

namespace {

// Observations sorted by q, with the admissible split points.
struct SplitGrid {
  std::vector<std::size_t> order;   // indices sorted by q (stable)
  std::vector<std::size_t> cuts;    // regime 1 = first cuts[c] sorted observations
  std::vector<double> gammas;       // q value at each cut
};

SplitGrid make_grid(std::span<const double> y, std::span<const double> q, const ThresholdOptions& opt) {
  opt.validate();
  if (y.size() != q.size()) throw InputError("threshold: y and q lengths differ");
  const std::size_t n = y.size();
  if (n < 2) throw InputError("threshold: need at least 2 observations");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(y[i]) || !std::isfinite(q[i])) throw InputError("threshold: non-finite input");

  const double lo = quantile(q, opt.trim);
  const double hi = quantile(q, 1.0 - opt.trim);
  SplitGrid g;
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });

  bool any_in_band = false;
  const auto min_regime = static_cast<std::size_t>(opt.min_regime);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = q[g.order[k]];
    if (k + 1 < n && q[g.order[k + 1]] == v) continue;  // last of a run of ties
    if (v < lo || v > hi) continue;
    const std::size_t n1 = k + 1;
    if (n1 == n) continue;  // no shock regime
    any_in_band = true;
    if (n1 < min_regime || n - n1 < min_regime) continue;
    g.cuts.push_back(n1);
    g.gammas.push_back(v);
  }
  if (!any_in_band) throw InputError("threshold: no candidate thresholds (constant q?)");
  if (g.cuts.empty()) throw DegenerateError("threshold: every candidate violates the minimum regime size");
  return g;
}

struct RegimeMoments {
  double mean1, mean2, ss1, ss2;
};

// Running sums of centered y along the sorted order, evaluated at each cut.
template <typename F>
void scan_cuts(const SplitGrid& g, std::span<const double> y_sorted, F&& visit) {
  const std::size_t n = y_sorted.size();
  double center = 0.0;
  for (double v : y_sorted) center += v;
  center /= static_cast<double>(n);
  double tot1 = 0.0, tot2 = 0.0;
  for (double v : y_sorted) {
    tot1 += v - center;
    tot2 += (v - center) * (v - center);
  }
  double s1 = 0.0, s2 = 0.0;
  std::size_t k = 0;
  for (std::size_t c = 0; c < g.cuts.size(); ++c) {
    for (; k < g.cuts[c]; ++k) {
      const double d = y_sorted[k] - center;
      s1 += d;
      s2 += d * d;
    }
    const auto n1 = static_cast<double>(g.cuts[c]);
    const auto n2 = static_cast<double>(n - g.cuts[c]);
    const double r1 = tot1 - s1, r2 = tot2 - s2;
    RegimeMoments m;
    m.mean1 = s1 / n1 + center;
    m.mean2 = r1 / n2 + center;
    m.ss1 = std::max(0.0, s2 - s1 * s1 / n1);
    m.ss2 = std::max(0.0, r2 - r1 * r1 / n2);
    visit(c, n1, n2, m);
  }
}

double wald_stat(double n1, double n2, const RegimeMoments& m) {
  const double d = m.mean2 - m.mean1;
  const double v = m.ss1 / (n1 * n1) + m.ss2 / (n2 * n2);
  if (v > 0.0) return d * d / v;
  return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

ThresholdFit estimate_threshold(std::span<const double> y, std::span<const double> q,
                                const ThresholdOptions& options) {
  const SplitGrid g = make_grid(y, q, options);
  const std::size_t n = y.size();
  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[g.order[k]];

  ThresholdFit fit;
  fit.candidates = g.gammas;
  fit.ssr_profile.resize(g.cuts.size());
  std::size_t best = 0;
  RegimeMoments best_m{};
  scan_cuts(g, ys, [&](std::size_t c, double, double, const RegimeMoments& m) {
    fit.ssr_profile[c] = m.ss1 + m.ss2;
    if (c == 0 || fit.ssr_profile[c] < fit.ssr_profile[best]) {
      best = c;
      best_m = m;
    }
  });

  fit.gamma_hat = g.gammas[best];
  fit.n1 = g.cuts[best];
  fit.n2 = n - fit.n1;
  fit.gamma_percentile = static_cast<double>(fit.n1) / static_cast<double>(n);
  fit.beta1 = best_m.mean1;
  fit.beta2 = best_m.mean2;
  fit.net_damage = fit.beta2 - fit.beta1;
  fit.ssr = fit.ssr_profile[best];
  fit.confidence = options.confidence;
  fit.critical_value = hansen_critical_value(options.confidence);
  fit.lr_curve.resize(g.cuts.size());
  for (std::size_t c = 0; c < g.cuts.size(); ++c) {
    if (c == best) {
      fit.lr_curve[c] = 0.0;
    } else if (fit.ssr > 0.0) {
      fit.lr_curve[c] = std::max(0.0, static_cast<double>(n) * (fit.ssr_profile[c] - fit.ssr) / fit.ssr);
    } else {
      fit.lr_curve[c] = fit.ssr_profile[c] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (fit.lr_curve[c] <= fit.critical_value) fit.conf_region.push_back(g.gammas[c]);
  }
  fit.conf_lo = fit.conf_region.front();
  fit.conf_hi = fit.conf_region.back();
  return fit;
}

SupWaldResult sup_wald_test(std::span<const double> y, std::span<const double> q,
                            const ThresholdOptions& options, int n_boot, std::uint64_t seed, unsigned workers) {
  if (n_boot < 100) throw InputError("sup_wald_test: n_boot must be >= 100");
  const SplitGrid g = make_grid(y, q, options);
  const std::size_t n = y.size();

  auto sup_of = [&](std::span<const double> y_sorted, double* gamma_at) {
    double best = -1.0;
    scan_cuts(g, y_sorted, [&](std::size_t c, double n1, double n2, const RegimeMoments& m) {
      const double w = wald_stat(n1, n2, m);
      if (w > best) {
        best = w;
        if (gamma_at) *gamma_at = g.gammas[c];
      }
    });
    return best;
  };

  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[g.order[k]];
  SupWaldResult out;
  out.n_boot = n_boot;
  out.seed = seed;
  out.statistic = sup_of(ys, &out.gamma_at_sup);

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - mean;
  std::vector<std::size_t> rank(n);  // position of observation i in sorted order
  for (std::size_t k = 0; k < n; ++k) rank[g.order[k]] = k;

  out.boot_statistics.assign(static_cast<std::size_t>(n_boot), 0.0);
  parallel_for(static_cast<std::size_t>(n_boot), workers, [&](std::size_t b) {
    CounterStream rs(seed, b);
    std::vector<double> yb(n);
    for (std::size_t i = 0; i < n; ++i) yb[rank[i]] = mean + resid[rs.index(n)];
    out.boot_statistics[b] = sup_of(yb, nullptr);
  });
  const auto exceed = std::count_if(out.boot_statistics.begin(), out.boot_statistics.end(),
                                    [&](double s) { return s > out.statistic; });
  out.p_value = static_cast<double>(exceed) / static_cast<double>(n_boot);
  return out;
}

EstimationSample estimation_sample(const PanelDataset& panel) {
  EstimationSample s;
  for (std::size_t i = 0; i < panel.rows; ++i) {
    const double q = panel.tci[i], y = panel.dv30[i];
    if (is_missing(q) || is_missing(y)) continue;
    s.dates.push_back(panel.tci.date_at(i));
    s.tci.push_back(q);
    s.dv30.push_back(y);
  }
  return s;
}

namespace {

RegimeContrast contrast(const std::vector<double>& normal, const std::vector<double>& shock) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    std::size_t k = 0;
    for (double x : v)
      if (!is_missing(x)) {
        s += x;
        ++k;
      }
    return k ? s / static_cast<double>(k) : kMissing;
  };
  RegimeContrast c;
  c.normal = mean(normal);
  c.shock = mean(shock);
  c.delta = c.shock - c.normal;
  c.ratio = c.normal != 0.0 ? c.shock / c.normal : kMissing;
  return c;
}

}  // namespace

RegimeSummary regime_stats(const PanelDataset& panel, double gamma) {
  std::vector<double> fee[2], delay[2], tci[2], dv[2];
  for (std::size_t i = 0; i < panel.rows; ++i) {
    const double q = panel.tci[i], y = panel.dv30[i];
    if (is_missing(q) || is_missing(y)) continue;
    const int r = q <= gamma ? 0 : 1;
    fee[r].push_back(panel.avg_fee_usd[i]);
    delay[r].push_back(panel.confirm_delay_min[i]);
    tci[r].push_back(q);
    dv[r].push_back(y);
  }
  if (dv[0].empty() || dv[1].empty()) throw DegenerateError("regime_stats: a regime is empty at this gamma");
  RegimeSummary s;
  s.gamma = gamma;
  s.n_normal = dv[0].size();
  s.n_shock = dv[1].size();
  s.avg_fee = contrast(fee[0], fee[1]);
  s.delay = contrast(delay[0], delay[1]);
  s.tci = contrast(tci[0], tci[1]);
  s.dv30 = contrast(dv[0], dv[1]);
  s.net_damage = s.dv30.delta;
  s.welch = welch_t(dv[0], dv[1]);
  return s;
}

std::vector<SweepRow> sensitivity_sweep(const PanelDataset& panel, std::span<const double> percentiles,
                                        int min_regime) {
  const EstimationSample sample = estimation_sample(panel);
  if (sample.tci.empty()) throw InputError("sensitivity_sweep: no estimation rows");
  std::vector<SweepRow> rows;
  for (double p : percentiles) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("sensitivity_sweep: percentile outside (0, 1)");
    const double gamma = quantile(sample.tci, p);
    const RegimeSummary s = regime_stats(panel, gamma);
    if (s.n_normal < static_cast<std::size_t>(min_regime) || s.n_shock < static_cast<std::size_t>(min_regime))
      throw DegenerateError("sensitivity_sweep: percentile " + std::to_string(p) +
                            " leaves a regime below the minimum size");
    rows.push_back({p, gamma, s.net_damage, s.welch.p_value, s.n_normal, s.n_shock});
  }
  return rows;
}

}  // namespace frictionbreak
