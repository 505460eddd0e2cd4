#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frictionbreak/series.hpp"

namespace frictionbreak {

struct TciParams {
  double fee_winsor_pct = 0.99;
  int vol_window = 30;
  double tau_target = 10.0;  // minutes
  /// Whether the fee volatility term uses winsorized (default) or raw fees.
  bool std_on_winsorized = true;

  void validate() const;
};

struct ThroughputBoundParams {
  double lambda_m = 0.0;    // blocks per second
  double block_size = 0.0;  // bytes
  double delta = 0.0;       // propagation delay, seconds
  double beta = 0.0;        // adversarial fraction in [0, 0.5)
  double rate = 0.0;        // bytes per second
};

struct ThroughputBound {
  double lhs = 0.0;  // bytes/s
  double rhs = 0.0;  // bytes/s
  bool satisfied = false;
};

/// Reads a `timestamp,<value_name>` CSV. Rows are returned sorted by timestamp.
std::vector<TimedValue> load_provider_csv(const std::filesystem::path& path,
                                          std::string_view value_name = "value");

DailySeries realized_cap(const DailySeries& market_cap, const DailySeries& mvrv);
DailySeries robust_velocity(const DailySeries& volume, const DailySeries& realized_cap);
/// (winsorized fee + trailing fee std) * delay / tau_target.
DailySeries tci(const DailySeries& fees, const DailySeries& delay_min, const TciParams& params);
/// Fee as a percent of mean realized wealth per UTXO.
DailySeries zeta(const DailySeries& avg_fee, const DailySeries& realized_cap, const DailySeries& utxo_count);
/// USD volume per UTXO.
DailySeries vodi(const DailySeries& volume, const DailySeries& utxo_count);

/// M/M/1 mean queue wait rho / (mu (1 - rho)) in minutes; nullopt when saturated (rho >= 1).
std::optional<double> queue_wait(double lambda_tx, double mu);

/// Both sides of lambda_m B / (1 + lambda_m Delta) < (1 - 2 beta) / (1 - beta - beta^2) r.
ThroughputBound throughput_bound(const ThroughputBoundParams& params);

/// Canonical metric names accepted in a source mapping.
inline constexpr std::string_view kRequiredMetrics[] = {
    "market_cap", "mvrv", "volume_usd", "avg_fee_usd", "confirm_delay_min",
    "utxo_count", "mempool_bytes", "hashrate_ths"};
inline constexpr std::string_view kOptionalMetrics[] = {"price_usd"};

/// `key = value` lines; `#` starts a comment. Paths are resolved against `base_dir`.
struct KeyValueFile {
  std::map<std::string, std::string> entries;
  std::filesystem::path base_dir;

  std::optional<std::string> get(const std::string& key) const;
};
KeyValueFile read_key_value_file(const std::filesystem::path& path);

using SourceMap = std::map<std::string, std::filesystem::path>;
/// Picks the metric entries out of a key-value file. Unknown keys are ignored.
SourceMap source_map_from(const KeyValueFile& kv);

struct PanelDataset {
  Date start{};
  std::size_t rows = 0;
  // raw
  DailySeries price_usd, market_cap_usd, mvrv, volume_usd, avg_fee_usd, confirm_delay_min, utxo_count,
      mempool_bytes, hashrate_ths;
  // derived
  DailySeries realized_cap_usd, v_robust, tci, dv30, zeta, vodi, price_mom30, util_mom30;

  /// Column name / series pairs in export order.
  std::vector<std::pair<std::string, const DailySeries*>> columns() const;
  const DailySeries& column(std::string_view name) const;
};

struct SourceReport {
  std::string metric;
  std::string path;
  std::size_t rows_read = 0;
  std::size_t days_covered = 0;
  std::size_t days_interpolated = 0;  // grid days without an observation at 00:00 UTC
};

struct IngestReport {
  std::vector<SourceReport> sources;
  std::size_t panel_rows = 0;
  std::size_t rows_dropped = 0;  // union-range days outside the common range
  bool price_from_market_cap = false;
};

struct PanelBuild {
  PanelDataset panel;
  IngestReport report;
};

/// Loads, resamples and aligns every source, then derives all metric columns.
PanelBuild build_panel(const SourceMap& sources, const TciParams& params = {});

/// Same, from already-loaded raw observations keyed by canonical metric name.
PanelBuild build_panel_from_points(const std::map<std::string, std::vector<TimedValue>>& points,
                                   const TciParams& params = {});

/// Writes the wide panel CSV (`date,<columns...>`); missing values are empty fields.
/// Numbers use the shortest round-trip representation.
void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path);
/// Reads a panel CSV written by write_panel_csv.
PanelDataset read_panel_csv(const std::filesystem::path& path);

/// Shortest round-trip text for a double; empty string for kMissing.
std::string format_number(double v);

}  // namespace frictionbreak
