#pragma once

#include <span>

#include <Eigen/Dense>

#include "frictionbreak/linmodel.hpp"

namespace frictionbreak {

struct IvFit {
  RegressionFit first_stage;  // endo on [1,] instruments
  double first_stage_f = 0.0; // joint F of the excluded instruments
  double first_stage_f_p = 1.0;
  bool weak_instruments = false;  // first_stage_f < 10
  Eigen::VectorXd coefficients;   // ([alpha,] beta)
  Eigen::VectorXd std_errors;     // classical, residuals from the structural equation
  double second_stage_beta = 0.0;
  double second_stage_se = 0.0;
  double second_stage_p = 1.0;
  std::size_t n_obs = 0;
};

/// Two-stage least squares with one endogenous regressor.
IvFit two_sls(std::span<const double> y, std::span<const double> endo, const Eigen::MatrixXd& instruments,
              bool include_intercept = true);

enum class GmmWeighting {
  kHeteroskedastic,  // Omega_j = sum_t x_t x_t' e_t^2 from first-step 2SLS residuals
  kHomoskedastic,    // Omega_j = s_j^2 sum_t x_t x_t' (reduces to 2SLS)
};

struct GmmOptions {
  bool include_intercept = true;  // constant added to both regressors and instruments
  GmmWeighting weighting = GmmWeighting::kHeteroskedastic;
};

struct GmmFit {
  double gamma = 0.0;
  std::size_t n1 = 0, n2 = 0;
  Eigen::VectorXd theta1, theta2;        // ([intercept,] endo...) per regime
  Eigen::VectorXd first_step1, first_step2;  // per-regime 2SLS
  Eigen::MatrixXd omega1, omega2;
  Eigen::MatrixXd cov1, cov2;            // (Zhat'X Omega^-1 X'Zhat)^-1
  double sup_wald = 0.0;                 // Wald for theta1 = theta2 with cov1 + cov2
  double sup_wald_p = 1.0;               // chi-square(dim theta) at the given gamma
};

/// Split-sample efficient GMM at a fixed threshold: regime 1 is q <= gamma.
GmmFit gmm_split(std::span<const double> y, const Eigen::MatrixXd& endo, const Eigen::MatrixXd& instruments,
                 std::span<const double> q, double gamma, const GmmOptions& options = {});

}  // namespace frictionbreak
