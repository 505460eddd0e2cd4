#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "frictionbreak/bootstrap.hpp"
#include "frictionbreak/error.hpp"
#include "frictionbreak/ingest.hpp"
#include "frictionbreak/iv.hpp"
#include "frictionbreak/regimes.hpp"
#include "frictionbreak/threshold.hpp"

namespace frictionbreak {

using Json = nlohmann::ordered_json;

/// Which TCI level delimits events in the event log.
struct EventThreshold {
  enum class Mode { kStatistical, kDeepShock, kExplicit };
  Mode mode = Mode::kStatistical;
  double value = 0.0;  // kExplicit only

  /// "stat", "deep" or a positive number.
  static EventThreshold parse(std::string_view text);
  std::string label() const;
};

struct RunConfig {
  std::filesystem::path sources;  // key-value file naming the provider CSVs
  std::filesystem::path panel;    // prebuilt panel CSV; takes precedence over `sources`
  std::filesystem::path out_dir = "frictionbreak-out";
  TciParams tci{};
  double trim = 0.05;
  double confidence = 0.95;
  int min_regime = 10;
  int n_boot = 5000;
  std::uint64_t seed = 20240101;
  unsigned workers = 1;
  BootstrapScheme boot_scheme = BootstrapScheme::kIid;
  std::size_t block_len = 0;
  bool reestimate_gamma = false;
  EventThreshold event_threshold{};
  double deep_percentile = 0.95;
  int merge_gap = 2;
  VelocityImpact velocity_impact = VelocityImpact::kStartToEnd;
  int longrun_horizon = 90;
  double exclusion_pct = 0.05;
  int z_window = 90;
  int adf_max_lag = -1;  // -1: floor(12 (n/100)^(1/4))
  int granger_max_lag = 30;
  std::vector<double> sweep_percentiles = default_sweep();
  GmmWeighting gmm_weighting = GmmWeighting::kHeteroskedastic;

  static std::vector<double> default_sweep();  // 0.60, 0.61, ..., 0.99

  /// Throws InputError on any out-of-range setting.
  void validate() const;
  /// Overwrites fields with every recognized key present in `kv`. When the file
  /// also lists metric sources, `sources` is set to the file itself.
  void apply(const KeyValueFile& kv, const std::filesystem::path& file);
  /// Settings that determine the numerical results (everything except paths and workers).
  Json to_json() const;
};

/// Raised by analysis stages; what() is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Plain table written as CSV.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_table_csv(const Table& table, const std::filesystem::path& path);

/// Builds the panel from the configured sources.
PanelBuild run_ingest(const RunConfig& config);
Json ingest_report_json(const PanelBuild& build);

/// Panel from `config.panel` if set, otherwise from the sources.
PanelDataset load_panel(const RunConfig& config);

/// Every analysis stage over one panel. Stages that depend on the threshold
/// estimate share one fit. All numbers come straight from the library operations.
class Analysis {
 public:
  Analysis(PanelDataset panel, RunConfig config);

  const PanelDataset& panel() const { return panel_; }
  const RunConfig& config() const { return config_; }
  const EstimationSample& sample() const { return sample_; }
  const ThresholdFit& threshold_fit();
  double deep_threshold() const;
  double event_threshold();

  Json threshold();
  Json elasticity();
  Json iv();
  Json bootstrap();
  Json diagnostics();
  Json regime_table();
  Json sweep();
  Json events();
  Json forensics();

  /// All stages in one document.
  Json report();
  Table threshold_profile_table();
  Table events_table();

  /// Plot-ready coordinate tables keyed by file stem.
  std::map<std::string, Table> figures();

 private:
  PanelDataset panel_;
  RunConfig config_;
  EstimationSample sample_;
  std::optional<ThresholdFit> fit_;
  std::optional<QuadrantSummary> quadrants_;
  std::optional<std::vector<EventRecord>> events_;
  std::optional<SupWaldResult> sup_wald_;
  std::optional<BootstrapDist> boot_;

  const QuadrantSummary& quadrants();
  const std::vector<EventRecord>& event_log();
  const SupWaldResult& sup_wald();
  const BootstrapDist& boot_dist();
};

/// Two-space indent, trailing newline.
void write_json(const Json& doc, const std::filesystem::path& path);

/// Writes report.json plus one CSV per figure table.
void write_report_bundle(Analysis& analysis, const std::filesystem::path& dir);

}  // namespace frictionbreak
