#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frictionbreak/ingest.hpp"
#include "frictionbreak/linmodel.hpp"

namespace frictionbreak {

/// Inverts P(xi <= x) = (1 - exp(-x/2))^2: returns -2 ln(1 - sqrt(confidence)).
double hansen_critical_value(double confidence);

struct ThresholdOptions {
  double trim = 0.05;       // fraction excluded from each tail of q when forming candidates
  int min_regime = 10;      // minimum observations per regime
  double confidence = 0.95; // level of the LR confidence region

  void validate() const;
};

/// Intercept-only two-regime fit: y = beta1 + e if q <= gamma, beta2 + e otherwise.
struct ThresholdFit {
  double gamma_hat = 0.0;
  double gamma_percentile = 0.0;  // share of q <= gamma_hat
  double beta1 = 0.0;             // normal-regime mean
  double beta2 = 0.0;             // shock-regime mean
  double net_damage = 0.0;        // beta2 - beta1
  double ssr = 0.0;
  std::size_t n1 = 0, n2 = 0;
  std::vector<double> candidates;   // admissible gammas, ascending
  std::vector<double> ssr_profile;  // SSR at each candidate
  std::vector<double> lr_curve;     // n (SSR(g) - SSR(g_hat)) / SSR(g_hat)
  double confidence = 0.95;
  double critical_value = 0.0;
  std::vector<double> conf_region;  // candidates with LR <= critical value
  double conf_lo = 0.0, conf_hi = 0.0;
};

/// Exhaustive concentrated least squares over the observed q values inside the
/// trimmed quantile band. Ties go to the smallest gamma.
ThresholdFit estimate_threshold(std::span<const double> y, std::span<const double> q,
                                const ThresholdOptions& options = {});

struct SupWaldResult {
  double statistic = 0.0;     // sup over candidates of the HC Wald statistic for beta1 = beta2
  double p_value = 1.0;       // share of bootstrap statistics exceeding the observed one
  double gamma_at_sup = 0.0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  std::string scheme = "null-model residual bootstrap, iid, fixed q";
  std::vector<double> boot_statistics;  // replicate b uses counter stream (seed, b)
};

/// Bootstrap SupWald linearity test. Replicates draw y* = mean(y) + e*, with e*
/// resampled from the null-model residuals and q held fixed.
SupWaldResult sup_wald_test(std::span<const double> y, std::span<const double> q,
                            const ThresholdOptions& options, int n_boot, std::uint64_t seed,
                            unsigned workers = 1);

/// Rows of a panel where both tci and dv30 are defined.
struct EstimationSample {
  std::vector<Date> dates;
  std::vector<double> dv30;
  std::vector<double> tci;
};
EstimationSample estimation_sample(const PanelDataset& panel);

struct RegimeContrast {
  double normal = 0.0;
  double shock = 0.0;
  double delta = 0.0;  // shock - normal
  double ratio = 0.0;  // shock / normal
};

struct RegimeSummary {
  double gamma = 0.0;
  std::size_t n_normal = 0, n_shock = 0;
  RegimeContrast avg_fee, delay, tci, dv30;
  double net_damage = 0.0;  // dv30.delta
  TestResult welch;         // normal vs shock dv30
};

/// Regime means on the estimation rows, split at tci <= gamma.
RegimeSummary regime_stats(const PanelDataset& panel, double gamma);

struct SweepRow {
  double percentile = 0.0;
  double gamma = 0.0;
  double net_damage = 0.0;
  double p_value = 1.0;
  std::size_t n_normal = 0, n_shock = 0;
};

/// For each percentile, gamma is the type-7 TCI quantile over the estimation rows.
std::vector<SweepRow> sensitivity_sweep(const PanelDataset& panel, std::span<const double> percentiles,
                                        int min_regime = 10);

}  // namespace frictionbreak
