#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frictionbreak/series.hpp"

namespace frictionbreak {

enum class CovType { kClassical, kHcRobust };

struct RegressionFit {
  Eigen::VectorXd coefficients;  // intercept first when fitted with one
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;  // two-sided, Student t with n - k df
  Eigen::MatrixXd covariance;
  Eigen::VectorXd residuals;
  double r_squared = 0.0;  // centered when an intercept is fitted
  double ssr = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  bool intercept = false;
  CovType cov_type = CovType::kClassical;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::map<std::string, double> detail;
};

/// Least squares of `response` on `design` (plus a leading constant column when
/// `intercept`). kHcRobust is the White (HC0) sandwich (X'X)^-1 (sum x x' e^2) (X'X)^-1.
/// Throws DegenerateError on rank deficiency, InputError when n <= k.
RegressionFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, bool intercept = true,
                      CovType cov = CovType::kClassical);

/// Welch t-test of mean(a) - mean(b) with Satterthwaite df; two-sided p-value.
/// detail: df, mean_a, mean_b.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

enum class AdfTrend { kConstant, kConstantTrend };

/// Augmented Dickey-Fuller test. The lag order 0..max_lag minimizing the Schwarz
/// criterion is chosen on a common sample, then the chosen regression is refit on
/// all usable observations. p-values follow MacKinnon (1994); critical values the
/// MacKinnon (2010) finite-sample response surface.
/// detail: lag, nobs, crit_1pct, crit_5pct, crit_10pct, sic.
TestResult adf_test(std::span<const double> series, int max_lag, AdfTrend trend = AdfTrend::kConstant);

/// MacKinnon (1994) approximate asymptotic p-value for a single-series ADF statistic.
double adf_pvalue(double stat, AdfTrend trend);
/// MacKinnon (2010) critical value at level 0.01, 0.05 or 0.10 for `nobs` observations.
double adf_critical_value(double level, AdfTrend trend, double nobs);

/// Does x Granger-cause y? F-test that all `lags` lags of x are zero in a
/// regression of y on a constant, `lags` lags of y and `lags` lags of x.
/// detail: F, df_num, df_den, nobs, aic (unrestricted model).
TestResult granger_test(std::span<const double> y, std::span<const double> x, int lags);

struct LagScan {
  int best_lag = 1;
  std::vector<TestResult> results;  // results[k] is lag k + 1
  std::vector<double> aic;          // unrestricted AIC on the common sample
};

/// Runs granger_test for lags 1..max_lag. The best lag minimizes the unrestricted
/// model's AIC, computed on the common sample that drops the first max_lag rows.
LagScan lag_scan(std::span<const double> y, std::span<const double> x, int max_lag);

/// n ln(ssr / n) + k ln(n) and n ln(ssr / n) + 2k.
double schwarz_criterion(double ssr, std::size_t n, std::size_t k);
double akaike_criterion(double ssr, std::size_t n, std::size_t k);

struct ElasticityFit {
  RegressionFit fit;  // coefficients: (alpha, beta)
  std::size_t rows_used = 0;
  std::size_t rows_dropped = 0;  // overlapping dates with a missing or non-positive value
};

/// OLS of ln(velocity_future) on ln(tci) over the overlapping dates where both are positive.
ElasticityFit fit_elasticity(const DailySeries& tci, const DailySeries& velocity_future);

}  // namespace frictionbreak
