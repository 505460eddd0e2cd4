#include "frictionbreak/iv.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

namespace {

Eigen::MatrixXd with_constant(const Eigen::MatrixXd& m, bool add) {
  if (!add) return m;
  Eigen::MatrixXd out(m.rows(), m.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(m.cols()) = m;
  return out;
}

bool full_column_rank(const Eigen::MatrixXd& m) {
  return m.colPivHouseholderQr().rank() == m.cols();
}

}  // namespace

IvFit two_sls(std::span<const double> y, std::span<const double> endo, const Eigen::MatrixXd& instruments,
              bool include_intercept) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (static_cast<Eigen::Index>(endo.size()) != n || instruments.rows() != n)
    throw InputError("two_sls: rows are not aligned");
  if (instruments.cols() < 1) throw InputError("two_sls: need at least one instrument");
  const Eigen::Index k = include_intercept ? 2 : 1;
  if (n <= instruments.cols() + k) throw DegenerateError("two_sls: too few observations");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::Map<const Eigen::VectorXd> xv(endo.data(), n);

  IvFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.first_stage = ols_fit(instruments, xv, include_intercept, CovType::kClassical);

  // F for joint nullity of the excluded instruments against the constant-only (or empty) model.
  const double ssr_u = fit.first_stage.ssr;
  const double ssr_r = include_intercept ? (xv.array() - xv.mean()).square().sum() : xv.squaredNorm();
  const double df1 = static_cast<double>(instruments.cols());
  const double df2 = static_cast<double>(n) - static_cast<double>(fit.first_stage.n_params);
  fit.first_stage_f = ssr_u > 0.0 ? std::max(0.0, ((ssr_r - ssr_u) / df1) / (ssr_u / df2))
                                  : std::numeric_limits<double>::infinity();
  fit.first_stage_f_p =
      std::isinf(fit.first_stage_f)
          ? 0.0
          : boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), fit.first_stage_f));
  fit.weak_instruments = fit.first_stage_f < 10.0;

  const Eigen::MatrixXd Zi = with_constant(instruments, include_intercept);
  const Eigen::VectorXd endo_hat = Zi * fit.first_stage.coefficients;
  const Eigen::MatrixXd Xhat = with_constant(endo_hat, include_intercept);
  const Eigen::MatrixXd X = with_constant(Eigen::MatrixXd(xv), include_intercept);
  const auto qr = Xhat.colPivHouseholderQr();
  if (qr.rank() < k) throw DegenerateError("two_sls: fitted endogenous regressor is degenerate");
  fit.coefficients = qr.solve(yv);

  const Eigen::VectorXd resid = yv - X * fit.coefficients;
  const double s2 = resid.squaredNorm() / static_cast<double>(n - k);
  const Eigen::MatrixXd cov = (Xhat.transpose() * Xhat).inverse() * s2;
  fit.std_errors = cov.diagonal().cwiseSqrt();
  fit.second_stage_beta = fit.coefficients[k - 1];
  fit.second_stage_se = fit.std_errors[k - 1];
  if (fit.second_stage_se > 0.0) {
    const double t = fit.second_stage_beta / fit.second_stage_se;
    fit.second_stage_p = 2.0 * boost::math::cdf(boost::math::complement(
                                   boost::math::students_t(static_cast<double>(n - k)), std::fabs(t)));
  } else {
    fit.second_stage_p = fit.second_stage_beta == 0.0 ? 1.0 : 0.0;
  }
  return fit;
}

namespace {

struct RegimeGmm {
  Eigen::VectorXd first_step, theta;
  Eigen::MatrixXd omega, cov;
};

RegimeGmm regime_gmm(const Eigen::VectorXd& y, const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                     GmmWeighting weighting, const char* label) {
  if (!full_column_rank(X))
    throw DegenerateError(std::string("gmm_split: instruments are rank deficient in the ") + label + " regime");
  // Zhat = P_X Z; Zhat'X = Z'X.
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> xtx_f(xtx);
  const Eigen::MatrixXd zhat = X * xtx_f.solve(X.transpose() * Z);
  if (!full_column_rank(zhat))
    throw DegenerateError(std::string("gmm_split: regressors are not identified in the ") + label + " regime");

  RegimeGmm r;
  r.first_step = zhat.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd e = y - Z * r.first_step;
  if (weighting == GmmWeighting::kHeteroskedastic) {
    r.omega = X.transpose() * e.array().square().matrix().asDiagonal() * X;
  } else {
    r.omega = xtx * (e.squaredNorm() / static_cast<double>(y.size()));
  }
  r.omega = 0.5 * (r.omega + r.omega.transpose());
  // Singularity is judged on the unit-diagonal rescaling so instrument units do not matter.
  const Eigen::VectorXd scale = r.omega.diagonal().cwiseMax(0.0).cwiseSqrt();
  double rcond = 0.0;
  if (scale.minCoeff() > 0.0) {
    const Eigen::MatrixXd unit = scale.cwiseInverse().asDiagonal() * r.omega * scale.cwiseInverse().asDiagonal();
    const Eigen::LLT<Eigen::MatrixXd> unit_f(unit);
    if (unit_f.info() == Eigen::Success) rcond = unit_f.rcond();
  }
  if (!(rcond > 1e-12))
    throw DegenerateError(std::string("gmm_split: singular weighting matrix in the ") + label + " regime");
  const Eigen::LLT<Eigen::MatrixXd> omega_f(r.omega);

  const Eigen::MatrixXd zx = zhat.transpose() * X;
  const Eigen::MatrixXd a = zx * omega_f.solve(zx.transpose());
  const Eigen::VectorXd b = zx * omega_f.solve(X.transpose() * y);
  const Eigen::LDLT<Eigen::MatrixXd> a_f(a);
  r.theta = a_f.solve(b);
  r.cov = a_f.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  r.cov = 0.5 * (r.cov + r.cov.transpose());
  return r;
}

}  // namespace

GmmFit gmm_split(std::span<const double> y, const Eigen::MatrixXd& endo, const Eigen::MatrixXd& instruments,
                 std::span<const double> q, double gamma, const GmmOptions& options) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (endo.rows() != n || instruments.rows() != n || static_cast<Eigen::Index>(q.size()) != n)
    throw InputError("gmm_split: rows are not aligned");
  const Eigen::MatrixXd Z = with_constant(endo, options.include_intercept);
  const Eigen::MatrixXd X = with_constant(instruments, options.include_intercept);
  if (X.cols() < Z.cols()) throw InputError("gmm_split: fewer instruments than regressors");

  std::vector<Eigen::Index> idx[2];
  for (Eigen::Index i = 0; i < n; ++i) idx[q[static_cast<std::size_t>(i)] <= gamma ? 0 : 1].push_back(i);
  const auto need = static_cast<std::size_t>(instruments.cols() + 2);
  for (int r = 0; r < 2; ++r)
    if (idx[r].size() < need)
      throw DegenerateError(std::string("gmm_split: the ") + (r == 0 ? "normal" : "shock") +
                            " regime has fewer observations than instruments + 2");

  RegimeGmm fits[2];
  for (int r = 0; r < 2; ++r) {
    const auto m = static_cast<Eigen::Index>(idx[r].size());
    Eigen::VectorXd yr(m);
    Eigen::MatrixXd zr(m, Z.cols()), xr(m, X.cols());
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index i = idx[r][static_cast<std::size_t>(k)];
      yr[k] = y[static_cast<std::size_t>(i)];
      zr.row(k) = Z.row(i);
      xr.row(k) = X.row(i);
    }
    fits[r] = regime_gmm(yr, zr, xr, options.weighting, r == 0 ? "normal" : "shock");
  }

  GmmFit out;
  out.gamma = gamma;
  out.n1 = idx[0].size();
  out.n2 = idx[1].size();
  out.theta1 = fits[0].theta;
  out.theta2 = fits[1].theta;
  out.first_step1 = fits[0].first_step;
  out.first_step2 = fits[1].first_step;
  out.omega1 = fits[0].omega;
  out.omega2 = fits[1].omega;
  out.cov1 = fits[0].cov;
  out.cov2 = fits[1].cov;
  const Eigen::VectorXd d = out.theta1 - out.theta2;
  const Eigen::MatrixXd v = out.cov1 + out.cov2;
  out.sup_wald = std::max(0.0, d.dot(v.ldlt().solve(d)));
  out.sup_wald_p = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared(static_cast<double>(d.size())), out.sup_wald));
  return out;
}

}  // namespace frictionbreak
