#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "frictionbreak/date.hpp"

namespace frictionbreak {

/// Distribution of the threshold variable. Lognormal parameters are on the log scale.
struct QLaw {
  enum class Kind { kLognormal, kUniform, kNormal };
  Kind kind = Kind::kLognormal;
  double a = 0.0;  // lognormal/normal: location; uniform: lower bound
  double b = 1.0;  // lognormal/normal: scale;    uniform: upper bound

  double quantile(double p) const;
  double cdf(double x) const;
};

struct DgpSpec {
  int n = 2856;
  double gamma_true = 1.63;
  double mu1 = 15.44;
  double mu2 = 6.06;
  double sigma = 40.0;
  QLaw q_law{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct ThresholdSample {
  std::vector<double> y;
  std::vector<double> q;
};

/// y_t = mu1 + sigma e_t if q_t <= gamma_true, else mu2 + sigma e_t.
/// q draws use substream 0, noise substream 1.
ThresholdSample gen_threshold_dgp(const DgpSpec& spec);

/// y_t = phi y_{t-1} + e_t with unit-variance innovations. |phi| < 1 starts from
/// the stationary distribution; phi = 1 starts at e_0 (random walk).
std::vector<double> gen_ar1(int n, double phi, std::uint64_t seed);

struct IvSample {
  std::vector<double> y;
  std::vector<double> endo;
  Eigen::MatrixXd instruments;  // n x 2, exogenous standard normals
};

/// Structural error u and instruments z1, z2 are independent N(0,1).
/// endo = strength (z1 + z2)/sqrt(2) + endogeneity u + sqrt(1 - endogeneity^2) v,
/// y = beta_true endo + u. |endogeneity| must not exceed 1.
IvSample gen_iv_dgp(int n, double beta_true, double endogeneity, double instrument_strength,
                    std::uint64_t seed);

/// Provider-format fixture whose ingested panel reproduces a threshold DGP:
/// the derived TCI equals the DGP's q and the forward 30-day velocity growth
/// equals the DGP's y on the estimation rows.
struct SourceFixtureSpec {
  DgpSpec dgp{.n = 400, .gamma_true = 1.63, .mu1 = 15.44, .mu2 = 6.06, .sigma = 10.0};
  Date start = Date::from_ymd(2016, 1, 1);
  bool include_price = true;
};

struct SourceFixture {
  std::vector<double> expected_dv30;  // DGP y after the lower clamp
  std::vector<double> expected_tci;   // DGP q
  Date first_estimation_date;         // date of expected_*[0]
};

/// Writes one `timestamp,value` CSV per metric plus `sources.cfg` into `dir`.
SourceFixture write_source_fixture(const std::filesystem::path& dir, const SourceFixtureSpec& spec);

}  // namespace frictionbreak
