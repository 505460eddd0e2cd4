#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frictionbreak/threshold.hpp"

namespace frictionbreak {

enum class BootstrapScheme { kIid, kMovingBlock };

struct BootstrapOptions {
  int n_boot = 5000;
  std::uint64_t seed = 0;
  BootstrapScheme scheme = BootstrapScheme::kIid;
  std::size_t block_len = 0;  // 0 = ceil(n^(1/3)); moving-block scheme only
  unsigned workers = 1;
  /// Re-estimate gamma on each replicate instead of holding it fixed
  /// (post-selection inference). Uses `threshold` for the search.
  bool reestimate_gamma = false;
  ThresholdOptions threshold{};
};

struct BootstrapDist {
  std::vector<double> replicates;  // net damage per replicate; replicate b uses stream (seed, b)
  double point_estimate = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  BootstrapScheme scheme = BootstrapScheme::kIid;
  std::size_t block_len = 1;
  std::size_t redraws = 0;  // resamples discarded because a regime came out empty
  bool reestimated_gamma = false;

  std::string scheme_label() const;
};

/// Mean of dv30 where tci > gamma minus mean where tci <= gamma.
double net_damage(std::span<const double> dv30, std::span<const double> tci, double gamma);

/// Resamples (tci, dv30) pairs and records the net damage of every replicate.
BootstrapDist bootstrap_net_damage(std::span<const double> dv30, std::span<const double> tci, double gamma,
                                   const BootstrapOptions& options);

/// Leave-one-out skewness ratio sum(d^3) / (6 (sum d^2)^1.5), d = mean(theta_(.)) - theta_(i).
/// Returns 0 when every leave-one-out value is identical.
double jackknife_acceleration(std::span<const double> dv30, std::span<const double> tci, double gamma);

struct BcaInterval {
  double lo = 0.0, hi = 0.0;
  double z0 = 0.0;            // Phi^-1 of the share of replicates below the point estimate
  double acceleration = 0.0;
  double alpha_lo = 0.0, alpha_hi = 0.0;  // adjusted quantile levels
  bool degenerate = false;    // every replicate identical
};

/// Endpoints for given bias and acceleration. Each endpoint is the order statistic
/// of rank ceil(alpha * B), clamped to [1, B]. The median-bias share is clamped to
/// [0.5/B, 1 - 0.5/B] before inversion.
BcaInterval bca_from_parameters(std::span<const double> replicates, double z0, double acceleration,
                                double level);

/// Full BCa: z0 from the replicates, acceleration from the jackknife on the original sample.
BcaInterval bca_interval(const BootstrapDist& dist, std::span<const double> dv30, std::span<const double> tci,
                         double level);

/// Plain percentile interval with the same order-statistic rule (z0 = a = 0).
BcaInterval percentile_interval(std::span<const double> replicates, double level);

/// Share of replicates strictly below `point`, clamped as in bca_from_parameters.
double bias_share(std::span<const double> replicates, double point);

}  // namespace frictionbreak
