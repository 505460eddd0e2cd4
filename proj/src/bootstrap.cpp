#include "frictionbreak/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "frictionbreak/error.hpp"
#include "frictionbreak/parallel.hpp"
#include "frictionbreak/rng.hpp"

namespace frictionbreak {

namespace {

constexpr std::size_t kMaxRedraws = 10000;

void check_pairs(std::span<const double> dv30, std::span<const double> tci) {
  if (dv30.size() != tci.size()) throw InputError("bootstrap: dv30 and tci lengths differ");
  for (std::size_t i = 0; i < dv30.size(); ++i)
    if (!std::isfinite(dv30[i]) || !std::isfinite(tci[i])) throw InputError("bootstrap: non-finite input");
}

// Regime sums; returns false when a regime is empty.
bool regime_means(std::span<const double> dv30, std::span<const double> tci, double gamma, double& out) {
  double s[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < dv30.size(); ++i) {
    const int r = tci[i] <= gamma ? 0 : 1;
    s[r] += dv30[i];
    ++n[r];
  }
  if (!n[0] || !n[1]) return false;
  out = s[1] / static_cast<double>(n[1]) - s[0] / static_cast<double>(n[0]);
  return true;
}

const boost::math::normal kStdNormal;

}  // namespace

std::string BootstrapDist::scheme_label() const {
  if (scheme == BootstrapScheme::kIid) return "iid pairs";
  return "moving-block pairs (block_len=" + std::to_string(block_len) + ")";
}

double net_damage(std::span<const double> dv30, std::span<const double> tci, double gamma) {
  check_pairs(dv30, tci);
  double v = 0.0;
  if (!regime_means(dv30, tci, gamma, v)) throw DegenerateError("net_damage: a regime is empty");
  return v;
}

BootstrapDist bootstrap_net_damage(std::span<const double> dv30, std::span<const double> tci, double gamma,
                                   const BootstrapOptions& opt) {
  check_pairs(dv30, tci);
  if (opt.n_boot < 100) throw InputError("bootstrap_net_damage: n_boot must be >= 100");
  const std::size_t n = dv30.size();
  BootstrapDist dist;
  dist.gamma = gamma;
  dist.seed = opt.seed;
  dist.scheme = opt.scheme;
  dist.reestimated_gamma = opt.reestimate_gamma;
  if (!regime_means(dv30, tci, gamma, dist.point_estimate))
    throw DegenerateError("bootstrap_net_damage: a regime is empty in the original sample");
  dist.block_len = 1;
  if (opt.scheme == BootstrapScheme::kMovingBlock) {
    dist.block_len = opt.block_len ? opt.block_len
                                   : static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
    dist.block_len = std::min(dist.block_len, n);
  }

  const auto nb = static_cast<std::size_t>(opt.n_boot);
  dist.replicates.assign(nb, 0.0);
  std::vector<std::size_t> redraws(nb, 0);
  parallel_for(nb, opt.workers, [&](std::size_t b) {
    CounterStream rs(opt.seed, b);
    std::vector<double> yb(n), qb(n);
    for (;;) {
      if (dist.scheme == BootstrapScheme::kIid) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = rs.index(n);
          yb[i] = dv30[j];
          qb[i] = tci[j];
        }
      } else {
        const std::size_t starts = n - dist.block_len + 1;
        for (std::size_t i = 0; i < n;) {
          const std::size_t s = rs.index(starts);
          for (std::size_t k = 0; k < dist.block_len && i < n; ++k, ++i) {
            yb[i] = dv30[s + k];
            qb[i] = tci[s + k];
          }
        }
      }
      double g = gamma;
      bool ok = true;
      if (opt.reestimate_gamma) {
        try {
          g = estimate_threshold(yb, qb, opt.threshold).gamma_hat;
        } catch (const Error&) {
          ok = false;
        }
      }
      if (ok && regime_means(yb, qb, g, dist.replicates[b])) break;
      if (++redraws[b] > kMaxRedraws) throw DegenerateError("bootstrap_net_damage: resamples keep emptying a regime");
    }
  });
  for (auto r : redraws) dist.redraws += r;
  return dist;
}

double jackknife_acceleration(std::span<const double> dv30, std::span<const double> tci, double gamma) {
  check_pairs(dv30, tci);
  const std::size_t n = dv30.size();
  if (n < 3) throw InputError("jackknife_acceleration: need at least 3 observations");
  double s[2] = {0.0, 0.0};
  double cnt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const int r = tci[i] <= gamma ? 0 : 1;
    s[r] += dv30[i];
    cnt[r] += 1.0;
  }
  if (cnt[0] < 2.0 || cnt[1] < 2.0)
    throw DegenerateError("jackknife_acceleration: a regime has fewer than 2 observations");
  std::vector<double> loo(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = tci[i] <= gamma ? 0 : 1;
    const double m_own = (s[r] - dv30[i]) / (cnt[r] - 1.0);
    const double m_other = s[1 - r] / cnt[1 - r];
    loo[i] = r == 1 ? m_own - m_other : m_other - m_own;
    mean += loo[i];
  }
  mean /= static_cast<double>(n);
  double s2 = 0.0, s3 = 0.0;
  for (double v : loo) {
    const double d = mean - v;
    s2 += d * d;
    s3 += d * d * d;
  }
  if (!(s2 > 0.0)) return 0.0;
  return s3 / (6.0 * std::pow(s2, 1.5));
}

double bias_share(std::span<const double> replicates, double point) {
  const auto b = static_cast<double>(replicates.size());
  const auto below = static_cast<double>(
      std::count_if(replicates.begin(), replicates.end(), [&](double v) { return v < point; }));
  return std::clamp(below / b, 0.5 / b, 1.0 - 0.5 / b);
}

BcaInterval bca_from_parameters(std::span<const double> replicates, double z0, double acceleration,
                                double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("bca: level outside (0, 1)");
  if (replicates.empty()) throw InputError("bca: no replicates");
  std::vector<double> sorted(replicates.begin(), replicates.end());
  std::sort(sorted.begin(), sorted.end());
  BcaInterval out;
  out.z0 = z0;
  out.acceleration = acceleration;
  if (sorted.front() == sorted.back()) {
    out.lo = out.hi = sorted.front();
    out.degenerate = true;
    out.alpha_lo = (1.0 - level) / 2.0;
    out.alpha_hi = 1.0 - out.alpha_lo;
    return out;
  }
  auto adjusted = [&](double alpha) {
    const double z = boost::math::quantile(kStdNormal, alpha);
    const double num = z0 + z;
    const double den = 1.0 - acceleration * num;
    if (!(den > 0.0)) return num > 0.0 ? 1.0 : 0.0;
    return boost::math::cdf(kStdNormal, z0 + num / den);
  };
  const auto B = static_cast<double>(sorted.size());
  auto order_stat = [&](double alpha) {
    const double rank = std::clamp(std::ceil(alpha * B), 1.0, B);
    return sorted[static_cast<std::size_t>(rank) - 1];
  };
  out.alpha_lo = adjusted((1.0 - level) / 2.0);
  out.alpha_hi = adjusted(1.0 - (1.0 - level) / 2.0);
  out.lo = order_stat(out.alpha_lo);
  out.hi = order_stat(out.alpha_hi);
  return out;
}

BcaInterval bca_interval(const BootstrapDist& dist, std::span<const double> dv30, std::span<const double> tci,
                         double level) {
  if (dist.replicates.size() < 100) throw InputError("bca_interval: need at least 100 replicates");
  const double z0 = boost::math::quantile(kStdNormal, bias_share(dist.replicates, dist.point_estimate));
  const double a = jackknife_acceleration(dv30, tci, dist.gamma);
  return bca_from_parameters(dist.replicates, z0, a, level);
}

BcaInterval percentile_interval(std::span<const double> replicates, double level) {
  return bca_from_parameters(replicates, 0.0, 0.0, level);
}

}  // namespace frictionbreak
