#include "frictionbreak/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace frictionbreak {

namespace {

Json num(double v) { return is_missing(v) ? Json(nullptr) : Json(v); }

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json test_json(const TestResult& t) {
  Json j;
  j["statistic"] = num(t.statistic);
  j["p_value"] = num(t.p_value);
  for (const auto& [k, v] : t.detail) j[k] = num(v);
  return j;
}

Json contrast_json(const RegimeContrast& c) {
  return Json{{"normal", num(c.normal)}, {"shock", num(c.shock)}, {"delta", num(c.delta)}, {"ratio", num(c.ratio)}};
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InputError("config: '" + key + "' is not a number: '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InputError("config: '" + key + "' is not an integer: '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("config: '" + key + "' is not a boolean: '" + text + "'");
}

std::string_view impact_name(VelocityImpact m) {
  switch (m) {
    case VelocityImpact::kStartToEnd:
      return "start_to_end";
    case VelocityImpact::kTrough:
      return "trough";
    case VelocityImpact::kPost30:
      return "post30";
  }
  return "start_to_end";
}

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string regime_label(double q, double gamma) { return q <= gamma ? "normal" : "shock"; }

}  // namespace

EventThreshold EventThreshold::parse(std::string_view text) {
  EventThreshold t;
  if (text == "stat" || text == "statistical") return t;
  if (text == "deep" || text == "deep-shock") {
    t.mode = Mode::kDeepShock;
    return t;
  }
  t.mode = Mode::kExplicit;
  t.value = parse_double("event_threshold", std::string(text));
  if (!(t.value > 0.0)) throw InputError("event threshold must be positive");
  return t;
}

std::string EventThreshold::label() const {
  switch (mode) {
    case Mode::kStatistical:
      return "statistical";
    case Mode::kDeepShock:
      return "deep-shock";
    case Mode::kExplicit:
      return "explicit";
  }
  return "statistical";
}

std::vector<double> RunConfig::default_sweep() {
  std::vector<double> p;
  for (int k = 60; k <= 99; ++k) p.push_back(k / 100.0);
  return p;
}

void RunConfig::validate() const {
  tci.validate();
  if (n_boot < 100) throw InputError("n_boot must be at least 100");
  if (!(trim > 0.0 && trim <= 0.25)) throw InputError("trim must lie in (0, 0.25]");
  if (!(confidence > 0.5 && confidence < 1.0)) throw InputError("confidence must lie in (0.5, 1)");
  if (min_regime < 2) throw InputError("min_regime must be at least 2");
  if (!(deep_percentile > 0.0 && deep_percentile < 1.0)) throw InputError("deep_percentile must lie in (0, 1)");
  if (merge_gap < 0) throw InputError("merge_gap must be non-negative");
  if (longrun_horizon < 30) throw InputError("longrun_horizon must be at least 30");
  if (!(exclusion_pct > 0.0)) throw InputError("exclusion_pct must be positive");
  if (z_window < 2) throw InputError("z_window must be at least 2");
  if (adf_max_lag < -1) throw InputError("adf_max_lag must be -1 (automatic) or non-negative");
  if (granger_max_lag < 1) throw InputError("granger_max_lag must be at least 1");
  if (sweep_percentiles.empty()) throw InputError("sweep_percentiles is empty");
  for (double p : sweep_percentiles)
    if (!(p > 0.0 && p < 1.0)) throw InputError("sweep percentiles must lie in (0, 1)");
}

void RunConfig::apply(const KeyValueFile& kv, const std::filesystem::path& file) {
  auto path_of = [&](const std::string& v) {
    const std::filesystem::path p(v);
    return p.is_absolute() ? p : kv.base_dir / p;
  };
  if (!source_map_from(kv).empty()) sources = file;
  for (const auto& [key, v] : kv.entries) {
    if (key == "panel") {
      panel = path_of(v);
    } else if (key == "out") {
      out_dir = path_of(v);
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(parse_int(key, v));
    } else if (key == "n_boot") {
      n_boot = static_cast<int>(parse_int(key, v));
    } else if (key == "trim") {
      trim = parse_double(key, v);
    } else if (key == "confidence") {
      confidence = parse_double(key, v);
    } else if (key == "min_regime") {
      min_regime = static_cast<int>(parse_int(key, v));
    } else if (key == "workers") {
      workers = static_cast<unsigned>(parse_int(key, v));
    } else if (key == "event_threshold") {
      event_threshold = EventThreshold::parse(v);
    } else if (key == "deep_percentile") {
      deep_percentile = parse_double(key, v);
    } else if (key == "merge_gap") {
      merge_gap = static_cast<int>(parse_int(key, v));
    } else if (key == "velocity_impact") {
      if (v == "start_to_end") {
        velocity_impact = VelocityImpact::kStartToEnd;
      } else if (v == "trough") {
        velocity_impact = VelocityImpact::kTrough;
      } else if (v == "post30") {
        velocity_impact = VelocityImpact::kPost30;
      } else {
        throw InputError("config: velocity_impact must be start_to_end, trough or post30");
      }
    } else if (key == "longrun_horizon") {
      longrun_horizon = static_cast<int>(parse_int(key, v));
    } else if (key == "exclusion_pct") {
      exclusion_pct = parse_double(key, v);
    } else if (key == "z_window") {
      z_window = static_cast<int>(parse_int(key, v));
    } else if (key == "adf_max_lag") {
      adf_max_lag = static_cast<int>(parse_int(key, v));
    } else if (key == "granger_max_lag") {
      granger_max_lag = static_cast<int>(parse_int(key, v));
    } else if (key == "bootstrap_scheme") {
      if (v == "iid") {
        boot_scheme = BootstrapScheme::kIid;
      } else if (v == "block") {
        boot_scheme = BootstrapScheme::kMovingBlock;
      } else {
        throw InputError("config: bootstrap_scheme must be iid or block");
      }
    } else if (key == "block_len") {
      block_len = static_cast<std::size_t>(parse_int(key, v));
    } else if (key == "reestimate_gamma") {
      reestimate_gamma = parse_bool(key, v);
    } else if (key == "fee_winsor_pct") {
      tci.fee_winsor_pct = parse_double(key, v);
    } else if (key == "vol_window") {
      tci.vol_window = static_cast<int>(parse_int(key, v));
    } else if (key == "tau_target") {
      tci.tau_target = parse_double(key, v);
    } else if (key == "std_on_winsorized") {
      tci.std_on_winsorized = parse_bool(key, v);
    } else if (key == "gmm_weighting") {
      if (v == "hc") {
        gmm_weighting = GmmWeighting::kHeteroskedastic;
      } else if (v == "homoskedastic") {
        gmm_weighting = GmmWeighting::kHomoskedastic;
      } else {
        throw InputError("config: gmm_weighting must be hc or homoskedastic");
      }
    } else if (key == "sweep_percentiles") {
      sweep_percentiles.clear();
      std::size_t pos = 0;
      while (pos <= v.size()) {
        const std::size_t comma = std::min(v.find(',', pos), v.size());
        std::string item = v.substr(pos, comma - pos);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        sweep_percentiles.push_back(parse_double(key, item));
        pos = comma + 1;
      }
    }
  }
}

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["n_boot"] = n_boot;
  j["trim"] = trim;
  j["confidence"] = confidence;
  j["min_regime"] = min_regime;
  j["tci"] = Json{{"fee_winsor_pct", tci.fee_winsor_pct},
                  {"vol_window", tci.vol_window},
                  {"tau_target", tci.tau_target},
                  {"std_on_winsorized", tci.std_on_winsorized}};
  j["bootstrap_scheme"] = boot_scheme == BootstrapScheme::kIid ? "iid" : "block";
  j["block_len"] = block_len;
  j["reestimate_gamma"] = reestimate_gamma;
  j["event_threshold"] = event_threshold.mode == EventThreshold::Mode::kExplicit
                             ? Json(event_threshold.value)
                             : Json(event_threshold.label());
  j["deep_percentile"] = deep_percentile;
  j["merge_gap"] = merge_gap;
  j["velocity_impact"] = impact_name(velocity_impact);
  j["longrun_horizon"] = longrun_horizon;
  j["exclusion_pct"] = exclusion_pct;
  j["z_window"] = z_window;
  j["adf_max_lag"] = adf_max_lag;
  j["granger_max_lag"] = granger_max_lag;
  j["gmm_weighting"] = gmm_weighting == GmmWeighting::kHeteroskedastic ? "hc" : "homoskedastic";
  j["sweep_percentiles"] = sweep_percentiles;
  return j;
}

void write_table_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw Error("failed writing " + path.string());
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

PanelBuild run_ingest(const RunConfig& config) {
  config.tci.validate();
  if (config.sources.empty()) throw InputError("no source mapping given (use --config)");
  const KeyValueFile kv = read_key_value_file(config.sources);
  return build_panel(source_map_from(kv), config.tci);
}

Json ingest_report_json(const PanelBuild& build) {
  Json j;
  Json sources = Json::array();
  for (const auto& s : build.report.sources)
    sources.push_back(Json{{"metric", s.metric},
                           {"path", s.path},
                           {"rows_read", s.rows_read},
                           {"days_covered", s.days_covered},
                           {"days_interpolated", s.days_interpolated}});
  j["sources"] = std::move(sources);
  j["panel_rows"] = build.report.panel_rows;
  j["rows_dropped"] = build.report.rows_dropped;
  j["price_from_market_cap"] = build.report.price_from_market_cap;
  if (build.panel.rows) {
    j["start"] = build.panel.start.to_string();
    j["end"] = (build.panel.start + static_cast<std::int32_t>(build.panel.rows) - 1).to_string();
  }
  return j;
}

PanelDataset load_panel(const RunConfig& config) {
  if (!config.panel.empty()) return read_panel_csv(config.panel);
  return run_ingest(config).panel;
}

Analysis::Analysis(PanelDataset panel, RunConfig config) : panel_(std::move(panel)), config_(std::move(config)) {
  config_.validate();
  sample_ = estimation_sample(panel_);
  if (sample_.tci.empty()) throw StageError("sample", "panel has no rows with both tci and dv30 defined");
}

const ThresholdFit& Analysis::threshold_fit() {
  if (!fit_)
    fit_ = stage("threshold", [&] {
      return estimate_threshold(sample_.dv30, sample_.tci,
                                ThresholdOptions{config_.trim, config_.min_regime, config_.confidence});
    });
  return *fit_;
}

const SupWaldResult& Analysis::sup_wald() {
  if (!sup_wald_)
    sup_wald_ = stage("threshold", [&] {
      return sup_wald_test(sample_.dv30, sample_.tci,
                           ThresholdOptions{config_.trim, config_.min_regime, config_.confidence}, config_.n_boot,
                           config_.seed, config_.workers);
    });
  return *sup_wald_;
}

double Analysis::deep_threshold() const { return quantile(sample_.tci, config_.deep_percentile); }

double Analysis::event_threshold() {
  switch (config_.event_threshold.mode) {
    case EventThreshold::Mode::kStatistical:
      return threshold_fit().gamma_hat;
    case EventThreshold::Mode::kDeepShock:
      return deep_threshold();
    case EventThreshold::Mode::kExplicit:
      return config_.event_threshold.value;
  }
  return threshold_fit().gamma_hat;
}

Json Analysis::threshold() {
  const ThresholdFit& f = threshold_fit();
  const SupWaldResult& w = sup_wald();
  Json j;
  j["gamma_hat"] = f.gamma_hat;
  j["gamma_percentile"] = f.gamma_percentile;
  j["beta1"] = f.beta1;
  j["beta2"] = f.beta2;
  j["net_damage"] = f.net_damage;
  j["ssr"] = f.ssr;
  j["n1"] = f.n1;
  j["n2"] = f.n2;
  j["n_obs"] = f.n1 + f.n2;
  j["n_candidates"] = f.candidates.size();
  j["trim"] = config_.trim;
  j["min_regime"] = config_.min_regime;
  j["lr_region"] = Json{{"confidence", f.confidence},
                        {"critical_value", f.critical_value},
                        {"lo", f.conf_lo},
                        {"hi", f.conf_hi},
                        {"n_points", f.conf_region.size()}};
  j["sup_wald"] = Json{{"statistic", w.statistic},
                       {"p_value", w.p_value},
                       {"gamma_at_sup", w.gamma_at_sup},
                       {"n_boot", w.n_boot},
                       {"seed", w.seed},
                       {"scheme", w.scheme}};
  return j;
}

Json Analysis::elasticity() {
  return stage("elasticity", [&] {
    const ElasticityFit e = fit_elasticity(panel_.tci, shift(panel_.v_robust, 30));
    const RegressionFit& f = e.fit;
    Json j;
    j["dependent"] = "ln(v_robust[t+30])";
    j["regressor"] = "ln(tci[t])";
    j["alpha"] = f.coefficients[0];
    j["beta"] = f.coefficients[1];
    j["std_errors"] = vec(f.std_errors);
    j["t_stats"] = vec(f.t_stats);
    j["p_values"] = vec(f.p_values);
    j["r_squared"] = f.r_squared;
    j["n_obs"] = e.rows_used;
    j["rows_dropped"] = e.rows_dropped;
    return j;
  });
}

Json Analysis::iv() {
  return stage("iv", [&] {
    const DailySeries mempool_lag = shift(panel_.mempool_bytes, -1);
    const DailySeries hash_change = pct_change(panel_.hashrate_ths, 1, Direction::kBackward);
    std::vector<double> y, endo, z1, z2;
    for (std::size_t i = 0; i < panel_.rows; ++i) {
      const double vals[] = {panel_.dv30[i], panel_.tci[i], mempool_lag[i], hash_change[i]};
      if (std::any_of(std::begin(vals), std::end(vals), is_missing)) continue;
      y.push_back(vals[0]);
      endo.push_back(vals[1]);
      z1.push_back(vals[2]);
      z2.push_back(vals[3]);
    }
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd Z(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      Z(i, 0) = z1[static_cast<std::size_t>(i)];
      Z(i, 1) = z2[static_cast<std::size_t>(i)];
    }
    const IvFit lin = two_sls(y, endo, Z, true);
    Json j;
    j["instruments"] = {"mempool_bytes[t-1]", "hashrate_ths 1-day percent change"};
    j["n_obs"] = lin.n_obs;
    j["linear_2sls"] = Json{{"alpha", lin.coefficients[0]},
                            {"beta", lin.second_stage_beta},
                            {"std_error", lin.second_stage_se},
                            {"p_value", lin.second_stage_p},
                            {"first_stage",
                             Json{{"coefficients", vec(lin.first_stage.coefficients)},
                                  {"r_squared", lin.first_stage.r_squared},
                                  {"f_statistic", num(lin.first_stage_f)},
                                  {"f_p_value", lin.first_stage_f_p},
                                  {"weak_instruments", lin.weak_instruments}}}};

    const double gamma = threshold_fit().gamma_hat;
    const Eigen::MatrixXd E = Eigen::Map<const Eigen::VectorXd>(endo.data(), n);
    const GmmFit g = gmm_split(y, E, Z, endo, gamma, GmmOptions{true, config_.gmm_weighting});
    j["gmm_split"] = Json{{"gamma", g.gamma},
                          {"weighting", config_.gmm_weighting == GmmWeighting::kHeteroskedastic ? "hc" : "homoskedastic"},
                          {"n1", g.n1},
                          {"n2", g.n2},
                          {"theta1", vec(g.theta1)},
                          {"theta2", vec(g.theta2)},
                          {"se1", vec(g.cov1.diagonal().cwiseSqrt())},
                          {"se2", vec(g.cov2.diagonal().cwiseSqrt())},
                          {"wald", g.sup_wald},
                          {"wald_p_value", g.sup_wald_p}};
    return j;
  });
}

const BootstrapDist& Analysis::boot_dist() {
  if (!boot_) {
    const double gamma = threshold_fit().gamma_hat;
    boot_ = stage("bootstrap", [&] {
      BootstrapOptions o;
      o.n_boot = config_.n_boot;
      o.seed = config_.seed;
      o.scheme = config_.boot_scheme;
      o.block_len = config_.block_len;
      o.workers = config_.workers;
      o.reestimate_gamma = config_.reestimate_gamma;
      o.threshold = ThresholdOptions{config_.trim, config_.min_regime, config_.confidence};
      return bootstrap_net_damage(sample_.dv30, sample_.tci, gamma, o);
    });
  }
  return *boot_;
}

Json Analysis::bootstrap() {
  const BootstrapDist& d = boot_dist();
  return stage("bootstrap", [&] {
    const BcaInterval bca = bca_interval(d, sample_.dv30, sample_.tci, config_.confidence);
    const BcaInterval pct = percentile_interval(d.replicates, config_.confidence);
    double mean = 0.0;
    for (double r : d.replicates) mean += r;
    mean /= static_cast<double>(d.replicates.size());
    double ss = 0.0;
    for (double r : d.replicates) ss += (r - mean) * (r - mean);
    Json j;
    j["statistic"] = "net damage (shock mean - normal mean of dv30)";
    j["gamma"] = d.gamma;
    j["point_estimate"] = d.point_estimate;
    j["n_boot"] = d.replicates.size();
    j["seed"] = d.seed;
    j["scheme"] = d.scheme_label();
    j["reestimated_gamma"] = d.reestimated_gamma;
    j["redraws"] = d.redraws;
    j["replicate_mean"] = mean;
    j["replicate_sd"] = std::sqrt(ss / static_cast<double>(d.replicates.size() - 1));
    j["level"] = config_.confidence;
    j["bca"] = Json{{"lo", bca.lo},
                    {"hi", bca.hi},
                    {"z0", bca.z0},
                    {"acceleration", bca.acceleration},
                    {"alpha_lo", bca.alpha_lo},
                    {"alpha_hi", bca.alpha_hi},
                    {"degenerate", bca.degenerate}};
    j["percentile"] = Json{{"lo", pct.lo}, {"hi", pct.hi}};
    return j;
  });
}

Json Analysis::diagnostics() {
  return stage("diagnostics", [&] {
    const auto n = static_cast<double>(sample_.dv30.size());
    int adf_lag = config_.adf_max_lag;
    if (adf_lag < 0) adf_lag = static_cast<int>(std::floor(12.0 * std::pow(n / 100.0, 0.25)));
    auto adf_pair = [&](const std::vector<double>& s) {
      return Json{{"constant", test_json(adf_test(s, adf_lag, AdfTrend::kConstant))},
                  {"constant_trend", test_json(adf_test(s, adf_lag, AdfTrend::kConstantTrend))}};
    };
    Json j;
    j["adf"] = Json{{"max_lag", adf_lag}, {"dv30", adf_pair(sample_.dv30)}, {"tci", adf_pair(sample_.tci)}};

    const int max_lag = std::max(
        1, std::min(config_.granger_max_lag, static_cast<int>((sample_.dv30.size() - 11) / 2)));
    const LagScan scan = lag_scan(sample_.dv30, sample_.tci, max_lag);
    Json per_lag = Json::array();
    for (std::size_t k = 0; k < scan.results.size(); ++k) {
      Json row = test_json(scan.results[k]);
      row["lag"] = k + 1;
      row["aic_common_sample"] = scan.aic[k];
      per_lag.push_back(std::move(row));
    }
    Json best = test_json(scan.results[static_cast<std::size_t>(scan.best_lag - 1)]);
    j["granger"] = Json{{"cause", "tci"},
                        {"effect", "dv30"},
                        {"max_lag", max_lag},
                        {"best_lag", scan.best_lag},
                        {"best", std::move(best)},
                        {"per_lag", std::move(per_lag)}};
    return j;
  });
}

Json Analysis::regime_table() {
  const double gamma = threshold_fit().gamma_hat;
  return stage("regimes", [&] {
    const RegimeSummary s = regime_stats(panel_, gamma);
    Json j;
    j["gamma"] = s.gamma;
    j["n_normal"] = s.n_normal;
    j["n_shock"] = s.n_shock;
    j["avg_fee_usd"] = contrast_json(s.avg_fee);
    j["confirm_delay_min"] = contrast_json(s.delay);
    j["tci"] = contrast_json(s.tci);
    j["dv30"] = contrast_json(s.dv30);
    j["net_damage"] = s.net_damage;
    j["welch"] = test_json(s.welch);
    return j;
  });
}

Json Analysis::sweep() {
  return stage("sweep", [&] {
    Json rows = Json::array();
    for (double p : config_.sweep_percentiles) {
      try {
        const std::vector<double> one{p};
        const SweepRow r = sensitivity_sweep(panel_, one, config_.min_regime).front();
        rows.push_back(Json{{"percentile", r.percentile},
                            {"gamma", r.gamma},
                            {"net_damage", r.net_damage},
                            {"p_value", r.p_value},
                            {"n_normal", r.n_normal},
                            {"n_shock", r.n_shock}});
      } catch (const DegenerateError& e) {
        rows.push_back(Json{{"percentile", p}, {"skipped", e.what()}});
      }
    }
    return rows;
  });
}

const QuadrantSummary& Analysis::quadrants() {
  if (!quadrants_) {
    const double gamma = threshold_fit().gamma_hat;
    quadrants_ = stage("quadrants", [&] {
      const DailySeries mask = shock_mask(panel_.tci, gamma);
      return classify_quadrants(panel_.price_mom30, panel_.util_mom30, &mask);
    });
  }
  return *quadrants_;
}

const std::vector<EventRecord>& Analysis::event_log() {
  if (!events_) {
    const double threshold = event_threshold();
    const QuadrantSummary& q = quadrants();
    events_ = stage("events", [&] {
      const EventInputs in{&panel_.tci, &panel_.v_robust, &panel_.avg_fee_usd, &q.labels};
      return extract_events(in, threshold, config_.merge_gap, config_.velocity_impact);
    });
  }
  return *events_;
}

Json Analysis::events() {
  const std::vector<EventRecord>& log = event_log();
  const double threshold = event_threshold();
  return stage("events", [&] {
    Json records = Json::array();
    std::vector<double> hs;
    int total_days = 0;
    for (const auto& e : log) {
      Json r;
      r["start"] = e.start.to_string();
      r["end"] = e.end.to_string();
      r["duration"] = e.duration;
      r["peak_tci"] = e.peak_tci;
      r["avg_fee"] = num(e.avg_fee);
      r["velocity_impact"] = num(e.velocity_impact);
      r["quadrant"] = e.quadrant ? Json(std::string(to_string(*e.quadrant))) : Json(nullptr);
      try {
        const Hysteresis h = hysteresis_degree(panel_.v_robust, e, config_.longrun_horizon);
        r["hysteresis"] = Json{{"h", num(h.h)},
                               {"counterfactual", h.counterfactual},
                               {"numerator", h.numerator},
                               {"denominator", h.denominator},
                               {"degenerate", h.degenerate}};
        if (!h.degenerate) hs.push_back(h.h);
      } catch (const InputError&) {
        r["hysteresis"] = nullptr;
      }
      total_days += e.duration;
      records.push_back(std::move(r));
    }
    Json summary{{"evaluable", hs.size()}};
    if (!hs.empty()) {
      double s = 0.0;
      for (double h : hs) s += h;
      summary["mean_h"] = s / static_cast<double>(hs.size());
      summary["median_h"] = quantile(hs, 0.5);
    } else {
      summary["mean_h"] = nullptr;
      summary["median_h"] = nullptr;
    }
    Json j;
    j["mode"] = config_.event_threshold.label();
    j["threshold"] = threshold;
    j["statistical_threshold"] = threshold_fit().gamma_hat;
    j["deep_shock_threshold"] = deep_threshold();
    j["merge_gap"] = config_.merge_gap;
    j["velocity_impact"] = impact_name(config_.velocity_impact);
    j["longrun_horizon"] = config_.longrun_horizon;
    j["count"] = log.size();
    j["total_days"] = total_days;
    j["hysteresis_summary"] = std::move(summary);
    j["records"] = std::move(records);
    return j;
  });
}

Json Analysis::forensics() {
  const double gamma = threshold_fit().gamma_hat;
  const QuadrantSummary& q = quadrants();
  return stage("forensics", [&] {
    Json j;
    Json shares, counts;
    for (Quadrant k : kQuadrants) {
      shares[std::string(to_string(k))] = q.shares[static_cast<std::size_t>(k)];
      counts[std::string(to_string(k))] = q.counts[static_cast<std::size_t>(k)];
    }
    j["quadrants"] = Json{{"gamma", gamma},
                          {"price_momentum_source", "price_usd"},
                          {"shares", std::move(shares)},
                          {"counts", std::move(counts)},
                          {"classified", q.classified},
                          {"excluded", q.excluded},
                          {"shock_days", q.shock_days},
                          {"shock_stagflation_risk", num(q.shock_stagflation_risk)}};
    if (panel_.price_usd.count_present() == 0) j["quadrants"]["price_momentum_source"] = "market_cap_usd";

    const ExclusionCensus c = exclusion_census(panel_.zeta, config_.exclusion_pct);
    j["exclusion"] = Json{{"threshold_pct", config_.exclusion_pct},
                          {"days", c.days},
                          {"share", c.share},
                          {"peak_zeta", c.peak ? Json(*c.peak) : Json(nullptr)}};

    const DailySeries mask = shock_mask(panel_.tci, gamma);
    j["concentration_delta_pct"] = concentration_delta(panel_.realized_cap_usd, panel_.utxo_count, mask);

    const DailySeries div = whale_divergence(panel_.volume_usd, panel_.utxo_count, config_.z_window);
    double s[2] = {0.0, 0.0};
    std::size_t k[2] = {0, 0};
    for (std::size_t i = 0; i < div.size(); ++i) {
      if (is_missing(div[i]) || is_missing(mask[i])) continue;
      const int r = mask[i] > 0.5 ? 1 : 0;
      s[r] += div[i];
      ++k[r];
    }
    j["whale_divergence"] = Json{{"z_window", config_.z_window},
                                 {"defined_days", div.count_present()},
                                 {"mean_normal", k[0] ? Json(s[0] / static_cast<double>(k[0])) : Json(nullptr)},
                                 {"mean_shock", k[1] ? Json(s[1] / static_cast<double>(k[1])) : Json(nullptr)}};
    return j;
  });
}

Json Analysis::report() {
  Json j;
  const Date panel_end = panel_.start + static_cast<std::int32_t>(panel_.rows) - 1;
  j["meta"] = Json{{"tool", "frictionbreak"},
                   {"version", "0.1.0"},
                   {"config", config_.to_json()},
                   {"panel", Json{{"start", panel_.start.to_string()},
                                  {"end", panel_end.to_string()},
                                  {"rows", panel_.rows}}},
                   {"estimation_sample", Json{{"start", sample_.dates.front().to_string()},
                                              {"end", sample_.dates.back().to_string()},
                                              {"rows", sample_.dates.size()}}}};
  j["threshold"] = threshold();
  j["regime_table"] = regime_table();
  j["elasticity"] = elasticity();
  j["iv"] = iv();
  j["bootstrap"] = bootstrap();
  j["diagnostics"] = diagnostics();
  j["sensitivity_sweep"] = sweep();
  j["events"] = events();
  j["forensics"] = forensics();
  return j;
}

Table Analysis::threshold_profile_table() {
  const ThresholdFit& f = threshold_fit();
  Table profile{{"gamma", "ssr", "lr", "in_region"}, {}};
  for (std::size_t k = 0; k < f.candidates.size(); ++k)
    profile.rows.push_back({format_number(f.candidates[k]), format_number(f.ssr_profile[k]),
                            format_number(f.lr_curve[k]), f.lr_curve[k] <= f.critical_value ? "1" : "0"});
  return profile;
}

Table Analysis::events_table() {
  Table ev{{"start", "end", "duration", "peak_tci", "avg_fee", "velocity_impact", "quadrant"}, {}};
  for (const auto& e : event_log())
    ev.rows.push_back({e.start.to_string(), e.end.to_string(), std::to_string(e.duration),
                       format_number(e.peak_tci), format_number(e.avg_fee), format_number(e.velocity_impact),
                       e.quadrant ? std::string(to_string(*e.quadrant)) : std::string()});
  return ev;
}

std::map<std::string, Table> Analysis::figures() {
  const ThresholdFit& f = threshold_fit();
  const double gamma = f.gamma_hat;
  std::map<std::string, Table> out;

  Table scatter{{"date", "tci", "dv30", "regime"}, {}};
  Table box{{"regime", "dv30"}, {}};
  for (std::size_t i = 0; i < sample_.dates.size(); ++i) {
    const std::string reg = regime_label(sample_.tci[i], gamma);
    scatter.rows.push_back({sample_.dates[i].to_string(), format_number(sample_.tci[i]),
                            format_number(sample_.dv30[i]), reg});
    box.rows.push_back({reg, format_number(sample_.dv30[i])});
  }
  out["fig3_scatter"] = std::move(scatter);
  out["fig8_kde"] = box;
  out["fig7_boxplot"] = std::move(box);

  Table phase{{"date", "log_tci", "log_velocity"}, {}};
  Table density{{"date", "mempool_bytes", "confirm_delay_min"}, {}};
  for (std::size_t i = 0; i < panel_.rows; ++i) {
    const double q = panel_.tci[i], v = panel_.v_robust[i];
    if (!is_missing(q) && !is_missing(v) && q > 0.0 && v > 0.0)
      phase.rows.push_back({panel_.tci.date_at(i).to_string(), format_number(std::log(q)),
                            format_number(std::log(v))});
    const double m = panel_.mempool_bytes[i], d = panel_.confirm_delay_min[i];
    if (!is_missing(m) && !is_missing(d))
      density.rows.push_back({panel_.tci.date_at(i).to_string(), format_number(m), format_number(d)});
  }
  out["fig5_phase"] = std::move(phase);
  out["fig6_density"] = std::move(density);

  out["threshold_profile"] = threshold_profile_table();

  Table sens{{"percentile", "gamma", "net_damage", "p_value", "n_normal", "n_shock"}, {}};
  for (const auto& r : sweep()) {
    if (r.contains("skipped")) continue;
    sens.rows.push_back({format_number(r["percentile"].get<double>()), format_number(r["gamma"].get<double>()),
                         format_number(r["net_damage"].get<double>()), format_number(r["p_value"].get<double>()),
                         std::to_string(r["n_normal"].get<std::size_t>()),
                         std::to_string(r["n_shock"].get<std::size_t>())});
  }
  out["fig2_sensitivity"] = std::move(sens);

  out["events"] = events_table();

  const DailySeries div = stage("forensics", [&] {
    return whale_divergence(panel_.volume_usd, panel_.utxo_count, config_.z_window);
  });
  Table whale{{"date", "divergence", "regime"}, {}};
  for (std::size_t i = 0; i < div.size(); ++i) {
    if (is_missing(div[i]) || is_missing(panel_.tci[i])) continue;
    whale.rows.push_back({div.date_at(i).to_string(), format_number(div[i]), regime_label(panel_.tci[i], gamma)});
  }
  out["fig10_divergence"] = std::move(whale);

  Table reps{{"replicate", "net_damage"}, {}};
  const BootstrapDist& d = boot_dist();
  for (std::size_t b = 0; b < d.replicates.size(); ++b)
    reps.rows.push_back({std::to_string(b), format_number(d.replicates[b])});
  out["bootstrap_replicates"] = std::move(reps);
  return out;
}

void write_report_bundle(Analysis& analysis, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Json report = analysis.report();
  const auto figures = analysis.figures();
  write_json(report, dir / "report.json");
  for (const auto& [name, table] : figures) write_table_csv(table, dir / (name + ".csv"));
}

}  // namespace frictionbreak
