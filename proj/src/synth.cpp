#include "frictionbreak/synth.hpp"

#include <cmath>
#include <fstream>

#include "frictionbreak/error.hpp"
#include "frictionbreak/ingest.hpp"
#include "frictionbreak/rng.hpp"
#include "frictionbreak/series.hpp"

namespace frictionbreak {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Substreams used by the source fixture beyond the DGP's own 0 and 1.
enum FixtureStream : std::uint64_t {
  kFees = 10,
  kWarmupVelocity,
  kWarmupDelay,
  kMarketCap,
  kMvrv,
  kUtxo,
  kMempool,
  kHashrate,
};

}  // namespace

double QLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InputError("QLaw::quantile: p outside (0, 1)");
  switch (kind) {
    case Kind::kLognormal:
      return std::exp(a + b * normal_quantile_as241(p));
    case Kind::kNormal:
      return a + b * normal_quantile_as241(p);
    case Kind::kUniform:
      return a + (b - a) * p;
  }
  return 0.0;
}

double QLaw::cdf(double x) const {
  switch (kind) {
    case Kind::kLognormal:
      return x <= 0.0 ? 0.0 : std_normal_cdf((std::log(x) - a) / b);
    case Kind::kNormal:
      return std_normal_cdf((x - a) / b);
    case Kind::kUniform:
      return x <= a ? 0.0 : x >= b ? 1.0 : (x - a) / (b - a);
  }
  return 0.0;
}

void DgpSpec::validate() const {
  if (n < 100) throw InputError("DgpSpec: n must be at least 100");
  if (!std::isfinite(gamma_true) || !std::isfinite(mu1) || !std::isfinite(mu2))
    throw InputError("DgpSpec: non-finite parameter");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("DgpSpec: sigma must be positive");
  const bool ok = q_law.kind == QLaw::Kind::kUniform ? q_law.b > q_law.a : q_law.b > 0.0;
  if (!ok || !std::isfinite(q_law.a) || !std::isfinite(q_law.b)) throw InputError("DgpSpec: invalid q law");
}

ThresholdSample gen_threshold_dgp(const DgpSpec& spec) {
  spec.validate();
  CounterStream qs(spec.seed, 0), es(spec.seed, 1);
  ThresholdSample s;
  s.q.resize(static_cast<std::size_t>(spec.n));
  s.y.resize(s.q.size());
  for (std::size_t t = 0; t < s.q.size(); ++t) {
    s.q[t] = spec.q_law.quantile(qs.uniform());
    s.y[t] = (s.q[t] <= spec.gamma_true ? spec.mu1 : spec.mu2) + spec.sigma * es.normal();
  }
  return s;
}

std::vector<double> gen_ar1(int n, double phi, std::uint64_t seed) {
  if (n < 50) throw InputError("gen_ar1: n must be at least 50");
  if (!(std::fabs(phi) <= 1.0)) throw InputError("gen_ar1: |phi| must not exceed 1");
  CounterStream es(seed, 0);
  std::vector<double> y(static_cast<std::size_t>(n));
  y[0] = std::fabs(phi) < 1.0 ? es.normal() / std::sqrt(1.0 - phi * phi) : es.normal();
  for (std::size_t t = 1; t < y.size(); ++t) y[t] = phi * y[t - 1] + es.normal();
  return y;
}

IvSample gen_iv_dgp(int n, double beta_true, double endogeneity, double instrument_strength,
                    std::uint64_t seed) {
  if (n < 200) throw InputError("gen_iv_dgp: n must be at least 200");
  if (!(std::fabs(endogeneity) <= 1.0)) throw InputError("gen_iv_dgp: |endogeneity| must not exceed 1");
  CounterStream z1s(seed, 0), z2s(seed, 1), us(seed, 2), vs(seed, 3);
  IvSample s;
  const auto m = static_cast<std::size_t>(n);
  s.y.resize(m);
  s.endo.resize(m);
  s.instruments.resize(n, 2);
  const double rest = std::sqrt(1.0 - endogeneity * endogeneity);
  for (std::size_t t = 0; t < m; ++t) {
    const double z1 = z1s.normal(), z2 = z2s.normal(), u = us.normal(), v = vs.normal();
    const auto r = static_cast<Eigen::Index>(t);
    s.instruments(r, 0) = z1;
    s.instruments(r, 1) = z2;
    s.endo[t] = instrument_strength * (z1 + z2) / std::sqrt(2.0) + endogeneity * u + rest * v;
    s.y[t] = beta_true * s.endo[t] + u;
  }
  return s;
}

SourceFixture write_source_fixture(const std::filesystem::path& dir, const SourceFixtureSpec& spec) {
  const ThresholdSample dgp = gen_threshold_dgp(spec.dgp);
  const TciParams params;
  const auto n = static_cast<std::size_t>(spec.dgp.n);
  const auto warm = static_cast<std::size_t>(params.vol_window - 1);
  const std::size_t lead = 30;
  const std::size_t total = warm + n + lead;
  const std::uint64_t seed = spec.dgp.seed;

  SourceFixture fx;
  fx.expected_tci = dgp.q;
  fx.expected_dv30.resize(n);
  for (std::size_t i = 0; i < n; ++i) fx.expected_dv30[i] = std::max(dgp.y[i], -90.0);
  fx.first_estimation_date = spec.start + static_cast<std::int32_t>(warm);

  std::vector<double> fee(total), delay(total), velocity(total), mcap(total), mvrv(total), volume(total),
      utxo(total), mempool(total), hashrate(total), price(total);
  CounterStream fee_s(seed, kFees), wv_s(seed, kWarmupVelocity), wd_s(seed, kWarmupDelay),
      mc_s(seed, kMarketCap), mv_s(seed, kMvrv), ux_s(seed, kUtxo), mp_s(seed, kMempool),
      hr_s(seed, kHashrate);

  for (auto& f : fee) f = std::exp(0.5 + 0.6 * fee_s.normal());
  const DailySeries fee_series(spec.start, fee);
  const DailySeries fee_w = winsorize_upper(fee_series, params.fee_winsor_pct);
  const DailySeries fee_sd = rolling_std(fee_w, RollingSpec{params.vol_window, params.vol_window});
  for (std::size_t t = 0; t < total; ++t) {
    if (t >= warm && t < warm + n) {
      delay[t] = params.tau_target * dgp.q[t - warm] / (fee_w[t] + fee_sd[t]);
    } else {
      delay[t] = 5.0 + 10.0 * wd_s.uniform();
    }
  }

  // Velocity is free for the first warm + 30 days; afterwards each value is fixed
  // by the forward growth target of the day 30 earlier.
  for (std::size_t t = 0; t < warm + lead; ++t) velocity[t] = 0.01 * std::exp(0.2 * wv_s.normal());
  for (std::size_t i = 0; i < n; ++i)
    velocity[warm + i + lead] = velocity[warm + i] * (1.0 + fx.expected_dv30[i] / 100.0);

  double log_mcap = std::log(1.0e11);
  double log_hash = std::log(1.0e8);
  for (std::size_t t = 0; t < total; ++t) {
    log_mcap += 0.03 * mc_s.normal();
    log_hash += 0.002 + 0.03 * hr_s.normal();
    mcap[t] = std::exp(log_mcap);
    mvrv[t] = 1.6 + 0.4 * std::sin(static_cast<double>(t) / 90.0) + 0.05 * mv_s.normal();
    volume[t] = velocity[t] * (mcap[t] / mvrv[t]);
    utxo[t] = 4.0e7 + 1.0e4 * static_cast<double>(t) + 1.0e5 * ux_s.normal();
    mempool[t] = std::exp(std::log(2.0e7) + 0.8 * mp_s.normal());
    hashrate[t] = std::exp(log_hash);
    price[t] = mcap[t] / (1.6e7 + 900.0 * static_cast<double>(t));
  }

  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& metric, const std::vector<double>& values) {
    std::ofstream out(dir / (metric + ".csv"));
    if (!out) throw Error("write_source_fixture: cannot write " + (dir / (metric + ".csv")).string());
    out << "timestamp,value\n";
    for (std::size_t t = 0; t < total; ++t)
      out << (spec.start + static_cast<std::int32_t>(t)).to_string() << "T00:00:00Z,"
          << format_number(values[t]) << '\n';
  };
  write("market_cap", mcap);
  write("mvrv", mvrv);
  write("volume_usd", volume);
  write("avg_fee_usd", fee);
  write("confirm_delay_min", delay);
  write("utxo_count", utxo);
  write("mempool_bytes", mempool);
  write("hashrate_ths", hashrate);
  if (spec.include_price) write("price_usd", price);

  std::ofstream cfg(dir / "sources.cfg");
  if (!cfg) throw Error("write_source_fixture: cannot write sources.cfg");
  cfg << "# synthetic provider exports\n";
  for (auto name : kRequiredMetrics) cfg << name << " = " << name << ".csv\n";
  if (spec.include_price) cfg << "price_usd = price_usd.csv\n";
  return fx;
}

}  // namespace frictionbreak
