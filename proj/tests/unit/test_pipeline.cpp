#include <doctest.h>

#include <fstream>
#include <sstream>

#include "frictionbreak/pipeline.hpp"
#include "frictionbreak/synth.hpp"
#include "oracles.hpp"

using namespace frictionbreak;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  std::filesystem::path dir;
  SourceFixtureSpec spec;
  SourceFixture truth;
};

Fixture make_fixture(const std::string& tag, double sigma, double mu2, std::uint64_t seed) {
  Fixture f;
  f.dir = oracle::scratch_dir(tag);
  f.spec.dgp.sigma = sigma;
  f.spec.dgp.mu2 = mu2;
  f.spec.dgp.seed = seed;
  f.truth = write_source_fixture(f.dir, f.spec);
  return f;
}

RunConfig config_for(const Fixture& f, int n_boot = 199) {
  RunConfig cfg;
  cfg.apply(read_key_value_file(f.dir / "sources.cfg"), f.dir / "sources.cfg");
  cfg.n_boot = n_boot;
  cfg.seed = 3;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("event threshold parsing") {
  CHECK(EventThreshold::parse("stat").mode == EventThreshold::Mode::kStatistical);
  CHECK(EventThreshold::parse("deep").mode == EventThreshold::Mode::kDeepShock);
  const EventThreshold e = EventThreshold::parse("14.5");
  CHECK(e.mode == EventThreshold::Mode::kExplicit);
  CHECK(e.value == 14.5);
  CHECK_THROWS_AS(EventThreshold::parse("-1"), InputError);
  CHECK_THROWS_AS(EventThreshold::parse("sometimes"), InputError);
}

TEST_CASE("run config validation and key-value overrides") {
  RunConfig cfg;
  cfg.validate();
  CHECK(cfg.sweep_percentiles.size() == 40);
  CHECK(cfg.sweep_percentiles.front() == doctest::Approx(0.60));
  CHECK(cfg.sweep_percentiles.back() == doctest::Approx(0.99));

  for (auto bad : {+[](RunConfig& c) { c.n_boot = 99; }, +[](RunConfig& c) { c.trim = 0.0; },
                   +[](RunConfig& c) { c.trim = 0.3; }, +[](RunConfig& c) { c.confidence = 0.5; },
                   +[](RunConfig& c) { c.confidence = 1.0; }}) {
    RunConfig c;
    bad(c);
    CHECK_THROWS_AS(c.validate(), InputError);
  }

  const auto dir = oracle::scratch_dir("pipeline-cfg");
  {
    std::ofstream out(dir / "run.cfg");
    out << "market_cap = mc.csv\nseed = 77\nn_boot = 250\ntrim = 0.1\nconfidence = 0.9\n"
           "event_threshold = deep\nvelocity_impact = trough\nbootstrap_scheme = block\n"
           "sweep_percentiles = 0.7, 0.8,0.9\nvol_window = 14\nout = results\n";
  }
  RunConfig c;
  c.apply(read_key_value_file(dir / "run.cfg"), dir / "run.cfg");
  CHECK(c.sources == dir / "run.cfg");
  CHECK(c.seed == 77);
  CHECK(c.n_boot == 250);
  CHECK(c.trim == 0.1);
  CHECK(c.confidence == 0.9);
  CHECK(c.event_threshold.mode == EventThreshold::Mode::kDeepShock);
  CHECK(c.velocity_impact == VelocityImpact::kTrough);
  CHECK(c.boot_scheme == BootstrapScheme::kMovingBlock);
  CHECK(c.sweep_percentiles == std::vector<double>{0.7, 0.8, 0.9});
  CHECK(c.tci.vol_window == 14);
  CHECK(c.out_dir == dir / "results");

  {
    std::ofstream out(dir / "bad.cfg");
    out << "n_boot = many\n";
  }
  RunConfig d;
  CHECK_THROWS_AS(d.apply(read_key_value_file(dir / "bad.cfg"), dir / "bad.cfg"), InputError);

  const Json j = c.to_json();
  CHECK(j.contains("seed"));
  CHECK_FALSE(j.contains("workers"));
  CHECK_FALSE(j.contains("out_dir"));
}

TEST_CASE("analysis on a threshold fixture recovers truth and reuses module results") {
  const Fixture f = make_fixture("pipeline-break", 2.0, 6.06, 21);
  const RunConfig cfg = config_for(f);
  Analysis a(load_panel(cfg), cfg);
  const Json rep = a.report();

  // Within one grid step of the true threshold.
  const ThresholdFit& fit = a.threshold_fit();
  const auto above = std::upper_bound(fit.candidates.begin(), fit.candidates.end(), f.spec.dgp.gamma_true);
  REQUIRE(above != fit.candidates.begin());
  CHECK(rep["threshold"]["gamma_hat"].get<double>() >= *(above - 1));
  if (above != fit.candidates.end()) CHECK(rep["threshold"]["gamma_hat"].get<double>() <= *above);
  CHECK(rep["threshold"]["sup_wald"]["p_value"].get<double>() < 0.01);

  // Every number comes straight from the module operation on the same inputs.
  const EstimationSample s = estimation_sample(a.panel());
  CHECK(s.tci.size() == f.truth.expected_tci.size());
  const ThresholdFit direct = estimate_threshold(s.dv30, s.tci, {cfg.trim, cfg.min_regime, cfg.confidence});
  CHECK(rep["threshold"]["gamma_hat"].get<double>() == direct.gamma_hat);
  CHECK(rep["threshold"]["net_damage"].get<double>() == direct.net_damage);
  const SupWaldResult sw = sup_wald_test(s.dv30, s.tci, {cfg.trim, cfg.min_regime, cfg.confidence}, cfg.n_boot, cfg.seed);
  CHECK(rep["threshold"]["sup_wald"]["statistic"].get<double>() == sw.statistic);
  const BootstrapDist bd = bootstrap_net_damage(s.dv30, s.tci, direct.gamma_hat, {.n_boot = cfg.n_boot, .seed = cfg.seed});
  const BcaInterval bca = bca_interval(bd, s.dv30, s.tci, cfg.confidence);
  CHECK(rep["bootstrap"]["bca"]["lo"].get<double>() == bca.lo);
  CHECK(rep["bootstrap"]["bca"]["hi"].get<double>() == bca.hi);
  const RegimeSummary rs = regime_stats(a.panel(), direct.gamma_hat);
  CHECK(rep["regime_table"]["net_damage"].get<double>() == rs.net_damage);

  for (const char* key : {"meta", "threshold", "regime_table", "elasticity", "iv", "bootstrap", "diagnostics",
                          "sensitivity_sweep", "events", "forensics"})
    CHECK_MESSAGE(rep.contains(key), key);
  CHECK(rep["diagnostics"]["adf"]["dv30"].contains("constant_trend"));
  CHECK(rep["sensitivity_sweep"].size() == 40);

  const auto figs = a.figures();
  for (const char* name : {"fig3_scatter", "fig7_boxplot", "fig8_kde", "fig5_phase", "fig6_density",
                           "threshold_profile", "fig2_sensitivity", "events"})
    CHECK_MESSAGE(figs.count(name) == 1, name);
  CHECK(figs.at("threshold_profile").rows.size() == fit.candidates.size());
}

TEST_CASE("analysis on a null fixture does not reject linearity") {
  const Fixture f = make_fixture("pipeline-null", 10.0, 15.44, 5);
  const RunConfig cfg = config_for(f);
  Analysis a(load_panel(cfg), cfg);
  CHECK(a.threshold()["sup_wald"]["p_value"].get<double>() > 0.05);
}

TEST_CASE("report bundle is byte identical across runs and worker counts") {
  const Fixture f = make_fixture("pipeline-det", 10.0, 6.06, 8);
  RunConfig cfg = config_for(f, 150);
  const auto out = oracle::scratch_dir("pipeline-det-out");
  std::vector<std::filesystem::path> dirs;
  for (unsigned w : {1u, 1u, 4u}) {
    cfg.workers = w;
    Analysis a(load_panel(cfg), cfg);
    dirs.push_back(out / ("run" + std::to_string(dirs.size())));
    write_report_bundle(a, dirs.back());
  }
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dirs[0])) {
    ++files;
    const auto name = entry.path().filename();
    CHECK_MESSAGE(slurp(entry.path()) == slurp(dirs[1] / name), name.string());
    CHECK_MESSAGE(slurp(entry.path()) == slurp(dirs[2] / name), name.string());
  }
  CHECK(files >= 10);
}

TEST_CASE("stage errors carry the stage name") {
  const Fixture f = make_fixture("pipeline-stage", 10.0, 6.06, 2);
  RunConfig cfg = config_for(f);
  cfg.min_regime = 100000;
  Analysis a(load_panel(cfg), cfg);
  try {
    a.threshold();
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "threshold");
    CHECK(std::string(e.what()).rfind("stage 'threshold': ", 0) == 0);
  }
}

TEST_CASE("ingest report and panel file round trip") {
  const Fixture f = make_fixture("pipeline-ingest", 10.0, 6.06, 4);
  const RunConfig cfg = config_for(f);
  const PanelBuild b = run_ingest(cfg);
  const Json j = ingest_report_json(b);
  CHECK(j["panel_rows"].get<std::size_t>() == b.panel.rows);
  CHECK(j["sources"].size() == 9);
  write_panel_csv(b.panel, f.dir / "panel.csv");
  RunConfig from_panel = cfg;
  from_panel.panel = f.dir / "panel.csv";
  Analysis x(load_panel(from_panel), from_panel);
  Analysis y(b.panel, cfg);
  CHECK(x.threshold_fit().gamma_hat == y.threshold_fit().gamma_hat);
}
