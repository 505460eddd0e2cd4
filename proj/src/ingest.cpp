#include "frictionbreak/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(strip(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

template <typename F>
DailySeries elementwise(const DailySeries& a, const DailySeries& b, const char* name, F f) {
  if (!a.same_grid(b)) throw InputError(std::string(name) + ": series are not on the same daily grid");
  std::vector<double> out(a.size(), kMissing);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    out[i] = f(a[i], b[i]);
  }
  return DailySeries(a.start(), std::move(out));
}

void require_positive(const DailySeries& s, const char* what) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!is_missing(s[i]) && s[i] <= 0.0)
      throw InputError(std::string("non-positive ") + what + " on " + s.date_at(i).to_string());
}

}  // namespace

void TciParams::validate() const {
  if (!(tau_target > 0.0)) throw InputError("TciParams: tau_target must be positive");
  if (vol_window < 2) throw InputError("TciParams: vol_window must be >= 2");
  if (!(fee_winsor_pct > 0.0 && fee_winsor_pct <= 1.0))
    throw InputError("TciParams: fee_winsor_pct outside (0, 1]");
}

std::vector<TimedValue> load_provider_csv(const std::filesystem::path& path, std::string_view value_name) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> ts_col, val_col;
  std::size_t ncols = 0;
  std::vector<TimedValue> rows;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (lineno == 1 && sv.substr(0, 3) == "\xEF\xBB\xBF") sv.remove_prefix(3);
    if (strip(sv).empty()) continue;
    const auto fields = split_commas(sv);
    if (!ts_col) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "timestamp") ts_col = i;
        if (fields[i] == value_name) val_col = i;
      }
      if (!ts_col) throw ParseError(path.string() + ": header lacks 'timestamp' column", lineno);
      if (!val_col)
        throw ParseError(path.string() + ": header lacks '" + std::string(value_name) + "' column", lineno);
      ncols = fields.size();
      continue;
    }
    if (fields.size() != ncols)
      throw ParseError(path.string() + ": expected " + std::to_string(ncols) + " fields", lineno);
    TimedValue tv;
    try {
      tv.timestamp = parse_timestamp(fields[*ts_col]);
    } catch (const InputError& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
    if (!parse_double(fields[*val_col], tv.value) || !std::isfinite(tv.value))
      throw ParseError(path.string() + ": unparseable value '" + std::string(fields[*val_col]) + "'", lineno);
    rows.push_back(tv);
  }
  if (!ts_col) throw ParseError(path.string() + ": empty file", 0);
  if (rows.empty()) throw ParseError(path.string() + ": no data rows", 0);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TimedValue& a, const TimedValue& b) { return a.timestamp < b.timestamp; });
  return rows;
}

DailySeries realized_cap(const DailySeries& market_cap, const DailySeries& mvrv) {
  require_positive(mvrv, "MVRV");
  return elementwise(market_cap, mvrv, "realized_cap", [](double m, double r) { return m / r; });
}

DailySeries robust_velocity(const DailySeries& volume, const DailySeries& rc) {
  require_positive(rc, "realized cap");
  return elementwise(volume, rc, "robust_velocity", [](double v, double r) { return v / r; });
}

DailySeries tci(const DailySeries& fees, const DailySeries& delay_min, const TciParams& params) {
  params.validate();
  for (std::size_t i = 0; i < delay_min.size(); ++i)
    if (!is_missing(delay_min[i]) && delay_min[i] < 0.0)
      throw InputError("tci: negative confirmation delay on " + delay_min.date_at(i).to_string());
  const DailySeries fee_w = winsorize_upper(fees, params.fee_winsor_pct);
  const DailySeries vol = rolling_std(params.std_on_winsorized ? fee_w : fees,
                                      RollingSpec{params.vol_window, params.vol_window});
  const DailySeries level = elementwise(fee_w, vol, "tci", [](double f, double s) { return f + s; });
  const double tau = params.tau_target;
  return elementwise(level, delay_min, "tci", [tau](double l, double d) { return l * (d / tau); });
}

DailySeries zeta(const DailySeries& avg_fee, const DailySeries& rc, const DailySeries& utxo_count) {
  require_positive(utxo_count, "UTXO count");
  require_positive(rc, "realized cap");
  const DailySeries wealth =
      elementwise(rc, utxo_count, "zeta", [](double r, double n) { return r / n; });
  return elementwise(avg_fee, wealth, "zeta", [](double f, double w) { return f / w * 100.0; });
}

DailySeries vodi(const DailySeries& volume, const DailySeries& utxo_count) {
  require_positive(utxo_count, "UTXO count");
  return elementwise(volume, utxo_count, "vodi", [](double v, double n) { return v / n; });
}

std::optional<double> queue_wait(double lambda_tx, double mu) {
  if (!(mu > 0.0)) throw InputError("queue_wait: service rate must be positive");
  if (lambda_tx < 0.0) throw InputError("queue_wait: negative arrival rate");
  const double rho = lambda_tx / mu;
  if (rho >= 1.0) return std::nullopt;
  return rho / (mu * (1.0 - rho));
}

ThroughputBound throughput_bound(const ThroughputBoundParams& p) {
  if (!(p.lambda_m > 0.0 && p.block_size > 0.0 && p.delta > 0.0 && p.rate > 0.0))
    throw InputError("throughput_bound: lambda_m, block_size, delta and rate must be positive");
  if (!(p.beta >= 0.0 && p.beta < 0.5)) throw InputError("throughput_bound: beta outside [0, 0.5)");
  const double denom = 1.0 - p.beta - p.beta * p.beta;
  if (denom <= 0.0) throw InputError("throughput_bound: degenerate denominator 1 - beta - beta^2");
  ThroughputBound out;
  out.lhs = p.lambda_m * p.block_size / (1.0 + p.lambda_m * p.delta);
  out.rhs = (1.0 - 2.0 * p.beta) / denom * p.rate;
  out.satisfied = out.lhs < out.rhs;
  return out;
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

KeyValueFile read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  KeyValueFile kv;
  kv.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = strip(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string() + ": expected key = value", lineno);
    const std::string key(strip(sv.substr(0, eq)));
    const std::string value(strip(sv.substr(eq + 1)));
    if (key.empty()) throw ParseError(path.string() + ": empty key", lineno);
    kv.entries[key] = value;
  }
  return kv;
}

SourceMap source_map_from(const KeyValueFile& kv) {
  SourceMap out;
  auto add = [&](std::string_view name) {
    if (auto v = kv.get(std::string(name))) {
      std::filesystem::path p(*v);
      out[std::string(name)] = p.is_absolute() ? p : kv.base_dir / p;
    }
  };
  for (auto name : kRequiredMetrics) add(name);
  for (auto name : kOptionalMetrics) add(name);
  return out;
}

std::vector<std::pair<std::string, const DailySeries*>> PanelDataset::columns() const {
  return {{"price_usd", &price_usd},
          {"market_cap_usd", &market_cap_usd},
          {"mvrv", &mvrv},
          {"volume_usd", &volume_usd},
          {"avg_fee_usd", &avg_fee_usd},
          {"confirm_delay_min", &confirm_delay_min},
          {"utxo_count", &utxo_count},
          {"mempool_bytes", &mempool_bytes},
          {"hashrate_ths", &hashrate_ths},
          {"realized_cap_usd", &realized_cap_usd},
          {"v_robust", &v_robust},
          {"tci", &tci},
          {"dv30", &dv30},
          {"zeta", &zeta},
          {"vodi", &vodi},
          {"price_mom30", &price_mom30},
          {"util_mom30", &util_mom30}};
}

const DailySeries& PanelDataset::column(std::string_view name) const {
  for (const auto& [n, s] : columns())
    if (n == name) return *s;
  throw InputError("unknown panel column '" + std::string(name) + "'");
}

PanelBuild build_panel(const SourceMap& sources, const TciParams& params) {
  for (auto name : kRequiredMetrics)
    if (!sources.count(std::string(name))) throw InputError("missing required source: " + std::string(name));
  std::map<std::string, std::vector<TimedValue>> points;
  for (const auto& [name, path] : sources) points[name] = load_provider_csv(path);
  PanelBuild out = build_panel_from_points(points, params);
  for (auto& s : out.report.sources) s.path = sources.at(s.metric).string();
  return out;
}

PanelBuild build_panel_from_points(const std::map<std::string, std::vector<TimedValue>>& points,
                                   const TciParams& params) {
  params.validate();
  for (auto name : kRequiredMetrics)
    if (!points.count(std::string(name))) throw InputError("missing required source: " + std::string(name));

  IngestReport report;
  std::map<std::string, DailySeries> daily;
  std::optional<Date> lo, hi, union_lo, union_hi;
  for (const auto& [name, pts] : points) {
    const bool known = std::find(std::begin(kRequiredMetrics), std::end(kRequiredMetrics), name) !=
                           std::end(kRequiredMetrics) ||
                       std::find(std::begin(kOptionalMetrics), std::end(kOptionalMetrics), name) !=
                           std::end(kOptionalMetrics);
    if (!known) continue;
    if (pts.empty()) throw InputError("source " + name + " has no observations");
    DailySeries s = resample_daily(pts);
    std::set<std::int64_t> exact;
    for (const auto& p : pts)
      if (p.timestamp % 86400 == 0) exact.insert(p.timestamp);
    SourceReport sr{name, "", pts.size(), s.count_present(), 0};
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!is_missing(s[i]) && !exact.count(s.date_at(i).epoch_seconds())) ++sr.days_interpolated;
    report.sources.push_back(sr);

    std::size_t first = 0, last = s.size() - 1;
    while (first < s.size() && is_missing(s[first])) ++first;
    while (last > first && is_missing(s[last])) --last;
    if (first == s.size()) throw InputError("source " + name + " covers no full day");
    const Date f = s.date_at(first), l = s.date_at(last);
    lo = lo ? std::max(*lo, f) : f;
    hi = hi ? std::min(*hi, l) : l;
    union_lo = union_lo ? std::min(*union_lo, f) : f;
    union_hi = union_hi ? std::max(*union_hi, l) : l;
    daily.emplace(name, std::move(s));
  }
  if (*lo > *hi) throw InputError("empty intersection of source date ranges");

  const auto n = static_cast<std::size_t>(*hi - *lo) + 1;
  auto grid = [&](const std::string& name) { return daily.at(name).reindex(*lo, n); };

  PanelBuild build;
  PanelDataset& p = build.panel;
  p.start = *lo;
  p.rows = n;
  p.market_cap_usd = grid("market_cap");
  p.mvrv = grid("mvrv");
  p.volume_usd = grid("volume_usd");
  p.avg_fee_usd = grid("avg_fee_usd");
  p.confirm_delay_min = grid("confirm_delay_min");
  p.utxo_count = grid("utxo_count");
  p.mempool_bytes = grid("mempool_bytes");
  p.hashrate_ths = grid("hashrate_ths");
  report.price_from_market_cap = !daily.count("price_usd");
  p.price_usd = report.price_from_market_cap ? DailySeries(*lo, std::vector<double>(n, kMissing))
                                             : grid("price_usd");

  p.realized_cap_usd = realized_cap(p.market_cap_usd, p.mvrv);
  p.v_robust = robust_velocity(p.volume_usd, p.realized_cap_usd);
  p.tci = tci(p.avg_fee_usd, p.confirm_delay_min, params);
  p.dv30 = pct_change(p.v_robust, 30, Direction::kForward);
  p.zeta = zeta(p.avg_fee_usd, p.realized_cap_usd, p.utxo_count);
  p.vodi = vodi(p.volume_usd, p.utxo_count);
  p.price_mom30 = pct_change(report.price_from_market_cap ? p.market_cap_usd : p.price_usd, 30,
                             Direction::kBackward);
  p.util_mom30 = pct_change(p.v_robust, 30, Direction::kBackward);

  report.panel_rows = n;
  report.rows_dropped = static_cast<std::size_t>(*union_hi - *union_lo) + 1 - n;
  build.report = std::move(report);
  return build;
}

std::string format_number(double v) {
  if (is_missing(v)) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const auto cols = panel.columns();
  out << "date";
  for (const auto& [name, _] : cols) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < panel.rows; ++i) {
    out << (panel.start + static_cast<std::int32_t>(i)).to_string();
    for (const auto& [_, s] : cols) out << ',' << format_number((*s)[i]);
    out << '\n';
  }
}

PanelDataset read_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open panel " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> data;
  std::optional<Date> start;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    const auto fields = split_commas(line);
    if (header.empty()) {
      for (auto f : fields) header.emplace_back(f);
      if (header.front() != "date") throw ParseError(path.string() + ": first column must be 'date'", lineno);
      data.resize(header.size() - 1);
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(path.string() + ": expected " + std::to_string(header.size()) + " fields", lineno);
    Date d;
    try {
      d = Date::parse(fields[0]);
    } catch (const InputError& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
    if (!start) start = d;
    if (d != *start + static_cast<std::int32_t>(rows))
      throw ParseError(path.string() + ": dates must be consecutive days", lineno);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v = kMissing;
      if (!fields[c].empty() && fields[c] != "nan" && !parse_double(fields[c], v))
        throw ParseError(path.string() + ": unparseable value '" + std::string(fields[c]) + "'", lineno);
      data[c - 1].push_back(v);
    }
    ++rows;
  }
  if (!start) throw ParseError(path.string() + ": panel has no rows", 0);

  PanelDataset p;
  p.start = *start;
  p.rows = rows;
  std::map<std::string, DailySeries> by_name;
  for (std::size_t c = 1; c < header.size(); ++c) by_name.emplace(header[c], DailySeries(*start, data[c - 1]));
  auto take = [&](const char* name) {
    const auto it = by_name.find(name);
    return it == by_name.end() ? DailySeries(*start, std::vector<double>(rows, kMissing)) : it->second;
  };
  p.price_usd = take("price_usd");
  p.market_cap_usd = take("market_cap_usd");
  p.mvrv = take("mvrv");
  p.volume_usd = take("volume_usd");
  p.avg_fee_usd = take("avg_fee_usd");
  p.confirm_delay_min = take("confirm_delay_min");
  p.utxo_count = take("utxo_count");
  p.mempool_bytes = take("mempool_bytes");
  p.hashrate_ths = take("hashrate_ths");
  p.realized_cap_usd = take("realized_cap_usd");
  p.v_robust = take("v_robust");
  p.tci = take("tci");
  p.dv30 = take("dv30");
  p.zeta = take("zeta");
  p.vodi = take("vodi");
  p.price_mom30 = take("price_mom30");
  p.util_mom30 = take("util_mom30");
  return p;
}

}  // namespace frictionbreak
