// Command-line front end. Every number it writes comes from the library's
// pipeline layer; this file only parses flags and picks output files.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "frictionbreak/pipeline.hpp"
#include "frictionbreak/synth.hpp"

namespace fb = frictionbreak;

namespace {

struct Flags {
  std::optional<std::string> config, out, panel, event_threshold;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_boot;
  std::optional<double> trim, confidence;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, Flags& f, bool analysis_flags) {
  cmd->add_option("--config", f.config, "Key-value file with metric sources and run settings");
  cmd->add_option("--out", f.out, "Output directory (default: $FRICTIONBREAK_OUT or ./frictionbreak-out)");
  if (!analysis_flags) return;
  cmd->add_option("--panel", f.panel, "Prebuilt panel CSV (skips ingestion)");
  cmd->add_option("--seed", f.seed, "Seed for all bootstrap draws");
  cmd->add_option("--n-boot", f.n_boot, "Bootstrap replicates (>= 100)");
  cmd->add_option("--trim", f.trim, "Trimmed fraction in each tail of the threshold search, in (0, 0.25]");
  cmd->add_option("--confidence", f.confidence, "Confidence level, in (0.5, 1)");
  cmd->add_option("--event-threshold", f.event_threshold, "Event cut level: stat, deep or a TCI value");
  cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores); results do not depend on it");
}

// Precedence: built-in defaults < FRICTIONBREAK_OUT < config file < flags.
fb::RunConfig resolve(const Flags& f) {
  fb::RunConfig cfg;
  if (const char* env = std::getenv("FRICTIONBREAK_OUT"); env && *env) cfg.out_dir = env;
  if (f.config) cfg.apply(fb::read_key_value_file(*f.config), *f.config);
  if (f.out) cfg.out_dir = *f.out;
  if (f.panel) cfg.panel = *f.panel;
  if (f.seed) cfg.seed = *f.seed;
  if (f.n_boot) cfg.n_boot = *f.n_boot;
  if (f.trim) cfg.trim = *f.trim;
  if (f.confidence) cfg.confidence = *f.confidence;
  if (f.event_threshold) cfg.event_threshold = fb::EventThreshold::parse(*f.event_threshold);
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

fb::Analysis make_analysis(const fb::RunConfig& cfg) { return fb::Analysis(fb::load_panel(cfg), cfg); }

void announce(const std::filesystem::path& p) { std::cout << "wrote " << p.string() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold econometrics of transaction friction and on-chain velocity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "frictionbreak 0.1.0");

  Flags flags;
  auto* ingest = app.add_subcommand("ingest", "Build the aligned daily panel from provider CSVs");
  auto* analyze = app.add_subcommand("analyze", "Run every estimation stage and write the report bundle");
  auto* threshold = app.add_subcommand("threshold", "Threshold fit, LR region and SupWald test");
  auto* iv = app.add_subcommand("iv", "Linear 2SLS and split-sample GMM");
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap distribution and BCa interval of net damage");
  auto* events = app.add_subcommand("events", "Event log, quadrant labels and hysteresis");
  auto* synth = app.add_subcommand("synth", "Write a synthetic provider fixture with known truth");
  add_common(ingest, flags, false);
  for (auto* c : {analyze, threshold, iv, bootstrap, events}) add_common(c, flags, true);

  fb::SourceFixtureSpec fx;
  std::string synth_out = "synthetic-sources";
  bool no_price = false;
  synth->add_option("--out", synth_out, "Fixture directory");
  synth->add_option("--n", fx.dgp.n, "Estimation rows (>= 100)");
  synth->add_option("--seed", fx.dgp.seed, "Generator seed");
  synth->add_option("--gamma", fx.dgp.gamma_true, "True threshold");
  synth->add_option("--mu1", fx.dgp.mu1, "Normal-regime mean of dv30");
  synth->add_option("--mu2", fx.dgp.mu2, "Shock-regime mean of dv30");
  synth->add_option("--sigma", fx.dgp.sigma, "Noise scale of dv30");
  synth->add_flag("--no-price", no_price, "Omit price_usd (momentum falls back to market cap)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      fx.include_price = !no_price;
      const fb::SourceFixture truth = fb::write_source_fixture(synth_out, fx);
      fb::Json j{{"n", fx.dgp.n},
                 {"seed", fx.dgp.seed},
                 {"gamma_true", fx.dgp.gamma_true},
                 {"mu1", fx.dgp.mu1},
                 {"mu2", fx.dgp.mu2},
                 {"sigma", fx.dgp.sigma},
                 {"first_estimation_date", truth.first_estimation_date.to_string()}};
      fb::write_json(j, std::filesystem::path(synth_out) / "truth.json");
      std::cout << "wrote fixture to " << synth_out << '\n';
      return 0;
    }

    const fb::RunConfig cfg = resolve(flags);
    std::filesystem::create_directories(cfg.out_dir);

    if (ingest->parsed()) {
      const fb::PanelBuild build = fb::run_ingest(cfg);
      fb::write_panel_csv(build.panel, cfg.out_dir / "panel.csv");
      fb::write_json(fb::ingest_report_json(build), cfg.out_dir / "ingest_report.json");
      announce(cfg.out_dir / "panel.csv");
      announce(cfg.out_dir / "ingest_report.json");
      return 0;
    }

    fb::Analysis a = make_analysis(cfg);
    if (analyze->parsed()) {
      fb::write_report_bundle(a, cfg.out_dir);
      announce(cfg.out_dir / "report.json");
    } else if (threshold->parsed()) {
      fb::Json j{{"threshold", a.threshold()}, {"regime_table", a.regime_table()}};
      fb::write_json(j, cfg.out_dir / "threshold.json");
      fb::write_table_csv(a.threshold_profile_table(), cfg.out_dir / "threshold_profile.csv");
      announce(cfg.out_dir / "threshold.json");
    } else if (iv->parsed()) {
      fb::write_json(fb::Json{{"iv", a.iv()}}, cfg.out_dir / "iv.json");
      announce(cfg.out_dir / "iv.json");
    } else if (bootstrap->parsed()) {
      fb::write_json(fb::Json{{"bootstrap", a.bootstrap()}}, cfg.out_dir / "bootstrap.json");
      announce(cfg.out_dir / "bootstrap.json");
    } else if (events->parsed()) {
      fb::write_json(fb::Json{{"events", a.events()}, {"forensics", a.forensics()}}, cfg.out_dir / "events.json");
      fb::write_table_csv(a.events_table(), cfg.out_dir / "events.csv");
      announce(cfg.out_dir / "events.json");
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "frictionbreak: error: " << e.what() << '\n';
    return 1;
  }
}
