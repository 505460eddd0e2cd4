#include "frictionbreak/linmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

namespace {

double t_two_sided(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
}

double f_upper(double f, double df1, double df2) {
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  const boost::math::fisher_f dist(df1, df2);
  return std::clamp(boost::math::cdf(boost::math::complement(dist, f)), 0.0, 1.0);
}

double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

// Lagged-regression row builders share this layout: y index t, regressors listed per column.
Eigen::VectorXd ssr_only_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double& ssr) {
  const auto qr = X.colPivHouseholderQr();
  if (qr.rank() < X.cols()) throw DegenerateError("regression design is rank deficient");
  Eigen::VectorXd b = qr.solve(y);
  ssr = (y - X * b).squaredNorm();
  return b;
}

}  // namespace

RegressionFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, bool intercept,
                      CovType cov) {
  const auto n = design.rows();
  if (response.size() != n) throw InputError("ols_fit: design and response lengths differ");
  const Eigen::Index k = design.cols() + (intercept ? 1 : 0);
  if (k == 0) throw InputError("ols_fit: no regressors");
  if (n <= k) throw InputError("ols_fit: insufficient observations");
  if (!design.allFinite() || !response.allFinite()) throw InputError("ols_fit: non-finite input");

  Eigen::MatrixXd X(n, k);
  if (intercept) X.col(0).setOnes();
  X.rightCols(design.cols()) = design;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) throw DegenerateError("ols_fit: design matrix is rank deficient");

  RegressionFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(k);
  fit.intercept = intercept;
  fit.cov_type = cov;
  fit.coefficients = qr.solve(response);
  fit.residuals = response - X * fit.coefficients;
  fit.ssr = fit.residuals.squaredNorm();

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd P = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = P * Rinv * Rinv.transpose() * P.transpose();

  if (cov == CovType::kClassical) {
    fit.covariance = xtx_inv * (fit.ssr / static_cast<double>(n - k));
  } else {
    const Eigen::MatrixXd meat = X.transpose() * fit.residuals.array().square().matrix().asDiagonal() * X;
    fit.covariance = xtx_inv * meat * xtx_inv;
  }
  fit.std_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.t_stats.resize(k);
  fit.p_values.resize(k);
  const double df = static_cast<double>(n - k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double b = fit.coefficients[j];
    const double se = fit.std_errors[j];
    if (se > 0.0) {
      fit.t_stats[j] = b / se;
      fit.p_values[j] = t_two_sided(fit.t_stats[j], df);
    } else {
      fit.t_stats[j] = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
      fit.p_values[j] = b == 0.0 ? 1.0 : 0.0;
    }
  }

  double sst;
  if (intercept) {
    sst = (response.array() - response.mean()).square().sum();
  } else {
    sst = response.squaredNorm();
  }
  fit.r_squared = sst > 0.0 ? std::clamp(1.0 - fit.ssr / sst, 0.0, 1.0) : 1.0;
  return fit;
}

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("welch_t: each sample needs at least 2 observations");
  const double ma = sample_mean(a), mb = sample_mean(b);
  const double va = sample_var(a, ma), vb = sample_var(b, mb);
  if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateError("welch_t: zero-variance sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;
  TestResult r;
  r.statistic = (ma - mb) / std::sqrt(sa + sb);
  const double df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = t_two_sided(r.statistic, df);
  r.detail = {{"df", df}, {"mean_a", ma}, {"mean_b", mb}, {"n_a", na}, {"n_b", nb}};
  return r;
}

double schwarz_criterion(double ssr, std::size_t n, std::size_t k) {
  const double nn = static_cast<double>(n);
  return nn * std::log(ssr / nn) + static_cast<double>(k) * std::log(nn);
}

double akaike_criterion(double ssr, std::size_t n, std::size_t k) {
  const double nn = static_cast<double>(n);
  return nn * std::log(ssr / nn) + 2.0 * static_cast<double>(k);
}

// MacKinnon (1994), N = 1.
double adf_pvalue(double stat, AdfTrend trend) {
  struct Surface {
    double min, max, star;
    std::array<double, 3> small;
    std::array<double, 4> large;
  };
  static constexpr Surface kConstant{-18.83, 2.74, -1.61, {2.1659, 1.4412, 0.038269},
                                     {1.7339, 0.93202, -0.12745, -0.010368}};
  static constexpr Surface kTrend{-16.18, 0.7, -2.89, {3.2512, 1.6047, 0.049588},
                                  {2.5261, 0.61654, -0.37956, -0.060285}};
  const Surface& s = trend == AdfTrend::kConstant ? kConstant : kTrend;
  if (std::isnan(stat)) return 1.0;
  if (stat > s.max) return 1.0;
  if (stat < s.min) return 0.0;
  double z;
  if (stat <= s.star) {
    z = s.small[0] + stat * (s.small[1] + stat * s.small[2]);
  } else {
    z = s.large[0] + stat * (s.large[1] + stat * (s.large[2] + stat * s.large[3]));
  }
  return boost::math::cdf(boost::math::normal(), z);
}

// MacKinnon (2010), N = 1: b0 + b1/T + b2/T^2 + b3/T^3.
double adf_critical_value(double level, AdfTrend trend, double nobs) {
  static constexpr double kC[3][4] = {{-3.43035, -6.5393, -16.786, -79.433},
                                      {-2.86154, -2.8903, -4.234, -40.040},
                                      {-2.56677, -1.5384, -2.809, 0.0}};
  static constexpr double kCt[3][4] = {{-3.95877, -9.0531, -28.428, -134.155},
                                       {-3.41049, -4.3904, -9.036, -45.374},
                                       {-3.12705, -2.5856, -3.925, -22.380}};
  int row;
  if (level == 0.01) {
    row = 0;
  } else if (level == 0.05) {
    row = 1;
  } else if (level == 0.10) {
    row = 2;
  } else {
    throw InputError("adf_critical_value: level must be 0.01, 0.05 or 0.10");
  }
  const double* b = trend == AdfTrend::kConstant ? kC[row] : kCt[row];
  const double inv = 1.0 / nobs;
  return b[0] + inv * (b[1] + inv * (b[2] + inv * b[3]));
}

namespace {

// ADF regression for lag p over rows t in [first, n).
struct AdfDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd dy;
  Eigen::Index gamma_col;
};

AdfDesign adf_design(std::span<const double> y, int p, std::size_t first, AdfTrend trend) {
  const std::size_t n = y.size();
  const auto rows = static_cast<Eigen::Index>(n - first);
  const Eigen::Index det = trend == AdfTrend::kConstant ? 1 : 2;
  AdfDesign d;
  d.X.resize(rows, det + 1 + p);
  d.dy.resize(rows);
  d.gamma_col = det;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = first + static_cast<std::size_t>(r);
    d.dy[r] = y[t] - y[t - 1];
    d.X(r, 0) = 1.0;
    if (det == 2) d.X(r, 1) = static_cast<double>(r + 1);
    d.X(r, det) = y[t - 1];
    for (int i = 1; i <= p; ++i) d.X(r, det + i) = y[t - i] - y[t - i - 1];
  }
  return d;
}

}  // namespace

TestResult adf_test(std::span<const double> series, int max_lag, AdfTrend trend) {
  if (max_lag < 0) throw InputError("adf_test: negative max_lag");
  const std::size_t n = series.size();
  if (n <= static_cast<std::size_t>(max_lag) + 10) throw InputError("adf_test: series too short");
  for (double v : series)
    if (!std::isfinite(v)) throw InputError("adf_test: non-finite value");
  const double m = sample_mean(series);
  if (!(sample_var(series, m) > 0.0)) throw DegenerateError("adf_test: constant series");

  const auto common_first = static_cast<std::size_t>(max_lag) + 1;
  int best = 0;
  double best_ic = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= max_lag; ++p) {
    const AdfDesign d = adf_design(series, p, common_first, trend);
    double ssr = 0.0;
    ssr_only_fit(d.X, d.dy, ssr);
    const double ic = schwarz_criterion(ssr, static_cast<std::size_t>(d.dy.size()),
                                        static_cast<std::size_t>(d.X.cols()));
    if (ic < best_ic) {
      best_ic = ic;
      best = p;
    }
  }

  const AdfDesign d = adf_design(series, best, static_cast<std::size_t>(best) + 1, trend);
  const RegressionFit fit = ols_fit(d.X, d.dy, false, CovType::kClassical);
  TestResult r;
  r.statistic = fit.t_stats[d.gamma_col];
  r.p_value = adf_pvalue(r.statistic, trend);
  const auto nobs = static_cast<double>(d.dy.size());
  r.detail = {{"lag", static_cast<double>(best)},
              {"nobs", nobs},
              {"sic", best_ic},
              {"gamma", fit.coefficients[d.gamma_col]},
              {"crit_1pct", adf_critical_value(0.01, trend, nobs)},
              {"crit_5pct", adf_critical_value(0.05, trend, nobs)},
              {"crit_10pct", adf_critical_value(0.10, trend, nobs)}};
  return r;
}

namespace {

struct GrangerFits {
  double ssr_u = 0.0;
  double ssr_r = 0.0;
  std::size_t nobs = 0;
};

GrangerFits granger_fits(std::span<const double> y, std::span<const double> x, int lags, std::size_t first,
                         bool restricted) {
  const std::size_t n = y.size();
  const auto rows = static_cast<Eigen::Index>(n - first);
  Eigen::MatrixXd Xu(rows, 1 + 2 * lags);
  Eigen::VectorXd yy(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = first + static_cast<std::size_t>(r);
    yy[r] = y[t];
    Xu(r, 0) = 1.0;
    for (int i = 1; i <= lags; ++i) {
      Xu(r, i) = y[t - static_cast<std::size_t>(i)];
      Xu(r, lags + i) = x[t - static_cast<std::size_t>(i)];
    }
  }
  GrangerFits g;
  g.nobs = static_cast<std::size_t>(rows);
  ssr_only_fit(Xu, yy, g.ssr_u);
  if (restricted) ssr_only_fit(Xu.leftCols(1 + lags), yy, g.ssr_r);
  return g;
}

void granger_checks(std::span<const double> y, std::span<const double> x, int lags) {
  if (lags < 1) throw InputError("granger_test: lags must be >= 1");
  if (y.size() != x.size()) throw InputError("granger_test: series lengths differ");
  if (y.size() <= static_cast<std::size_t>(2 * lags + 10)) throw InputError("granger_test: insufficient sample");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]) || !std::isfinite(x[i])) throw InputError("granger_test: non-finite value");
}

}  // namespace

TestResult granger_test(std::span<const double> y, std::span<const double> x, int lags) {
  granger_checks(y, x, lags);
  const GrangerFits g = granger_fits(y, x, lags, static_cast<std::size_t>(lags), true);
  const double df_num = lags;
  const double df_den = static_cast<double>(g.nobs) - 2.0 * lags - 1.0;
  TestResult r;
  r.statistic = g.ssr_u > 0.0 ? ((g.ssr_r - g.ssr_u) / df_num) / (g.ssr_u / df_den)
                              : std::numeric_limits<double>::infinity();
  r.statistic = std::max(r.statistic, 0.0);
  r.p_value = f_upper(r.statistic, df_num, df_den);
  r.detail = {{"F", r.statistic},
              {"df_num", df_num},
              {"df_den", df_den},
              {"nobs", static_cast<double>(g.nobs)},
              {"aic", akaike_criterion(g.ssr_u, g.nobs, static_cast<std::size_t>(1 + 2 * lags))}};
  return r;
}

LagScan lag_scan(std::span<const double> y, std::span<const double> x, int max_lag) {
  if (max_lag < 1) throw InputError("lag_scan: max_lag must be >= 1");
  granger_checks(y, x, max_lag);
  LagScan scan;
  double best_aic = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= max_lag; ++p) {
    scan.results.push_back(granger_test(y, x, p));
    const GrangerFits g = granger_fits(y, x, p, static_cast<std::size_t>(max_lag), false);
    const double aic = akaike_criterion(g.ssr_u, g.nobs, static_cast<std::size_t>(1 + 2 * p));
    scan.aic.push_back(aic);
    if (aic < best_aic) {
      best_aic = aic;
      scan.best_lag = p;
    }
  }
  return scan;
}

ElasticityFit fit_elasticity(const DailySeries& tci, const DailySeries& velocity_future) {
  const Date lo = std::max(tci.start(), velocity_future.start());
  const Date hi = std::min(tci.end(), velocity_future.end());
  std::vector<double> lx, ly;
  ElasticityFit out;
  for (Date d = lo; d <= hi; d = d + 1) {
    const double q = tci.at(d), v = velocity_future.at(d);
    if (is_missing(q) && is_missing(v)) continue;
    if (is_missing(q) || is_missing(v) || q <= 0.0 || v <= 0.0) {
      ++out.rows_dropped;
      continue;
    }
    lx.push_back(std::log(q));
    ly.push_back(std::log(v));
  }
  out.rows_used = lx.size();
  if (out.rows_used < 30) throw InputError("fit_elasticity: fewer than 30 usable rows");
  const Eigen::Map<const Eigen::VectorXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(ly.data(), static_cast<Eigen::Index>(ly.size()));
  out.fit = ols_fit(Eigen::MatrixXd(x), Eigen::VectorXd(yv), true, CovType::kClassical);
  return out;
}

}  // namespace frictionbreak
