#include "frictionbreak/regimes.hpp"

#include <algorithm>
#include <cmath>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::kBoom:
      return "boom";
    case Quadrant::kSpeculation:
      return "speculation";
    case Quadrant::kStagflation:
      return "stagflation";
    case Quadrant::kCapitulation:
      return "capitulation";
  }
  return "unknown";
}

Quadrant classify_quadrant(double price_momentum, double utility_momentum) {
  if (price_momentum > 0.0) return utility_momentum > 0.0 ? Quadrant::kBoom : Quadrant::kSpeculation;
  return utility_momentum > 0.0 ? Quadrant::kCapitulation : Quadrant::kStagflation;
}

DailySeries shock_mask(const DailySeries& tci, double gamma) {
  std::vector<double> out(tci.size(), kMissing);
  for (std::size_t i = 0; i < tci.size(); ++i)
    if (!is_missing(tci[i])) out[i] = tci[i] > gamma ? 1.0 : 0.0;
  return DailySeries(tci.start(), std::move(out));
}

QuadrantSummary classify_quadrants(const DailySeries& price_mom, const DailySeries& util_mom,
                                   const DailySeries* shock) {
  if (!price_mom.same_grid(util_mom)) throw InputError("classify_quadrants: momenta are not aligned");
  if (shock && !shock->same_grid(price_mom)) throw InputError("classify_quadrants: shock mask is not aligned");
  QuadrantSummary s;
  s.labels.resize(price_mom.size());
  std::size_t shock_stag = 0;
  for (std::size_t i = 0; i < price_mom.size(); ++i) {
    if (is_missing(price_mom[i]) || is_missing(util_mom[i])) {
      ++s.excluded;
      continue;
    }
    const Quadrant q = classify_quadrant(price_mom[i], util_mom[i]);
    s.labels[i] = q;
    ++s.counts[static_cast<std::size_t>(q)];
    ++s.classified;
    if (shock && !is_missing((*shock)[i]) && (*shock)[i] > 0.5) {
      ++s.shock_days;
      if (q == Quadrant::kStagflation) ++shock_stag;
    }
  }
  for (std::size_t k = 0; k < 4; ++k)
    s.shares[k] = s.classified ? static_cast<double>(s.counts[k]) / static_cast<double>(s.classified) : 0.0;
  if (s.shock_days) s.shock_stagflation_risk = static_cast<double>(shock_stag) / static_cast<double>(s.shock_days);
  return s;
}

std::vector<EventRecord> extract_events(const EventInputs& in, double threshold, int merge_gap,
                                        VelocityImpact impact) {
  if (!in.tci || !in.velocity) throw InputError("extract_events: tci and velocity are required");
  if (!(threshold > 0.0)) throw InputError("extract_events: threshold must be positive");
  if (merge_gap < 0) throw InputError("extract_events: negative merge_gap");
  const DailySeries& tci = *in.tci;
  if (in.quadrants && in.quadrants->size() != tci.size())
    throw InputError("extract_events: quadrant labels are not aligned with tci");

  // Runs of exceedance days as [first, last] index pairs, merged across short gaps.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < tci.size(); ++i) {
    if (is_missing(tci[i]) || !(tci[i] > threshold)) continue;
    if (!runs.empty() && i - runs.back().second - 1 <= static_cast<std::size_t>(merge_gap)) {
      runs.back().second = i;
    } else {
      runs.emplace_back(i, i);
    }
  }

  std::vector<EventRecord> events;
  for (const auto& [a, b] : runs) {
    EventRecord e;
    e.start = tci.date_at(a);
    e.end = tci.date_at(b);
    e.duration = static_cast<int>(b - a + 1);
    e.peak_tci = tci[a];
    double fee_sum = 0.0;
    std::size_t fee_n = 0;
    std::array<std::size_t, 4> votes{};
    for (std::size_t i = a; i <= b; ++i) {
      if (!is_missing(tci[i])) e.peak_tci = std::max(e.peak_tci, tci[i]);
      if (in.avg_fee) {
        const double f = in.avg_fee->at(tci.date_at(i));
        if (!is_missing(f)) {
          fee_sum += f;
          ++fee_n;
        }
      }
      if (in.quadrants && (*in.quadrants)[i]) ++votes[static_cast<std::size_t>(*(*in.quadrants)[i])];
    }
    if (fee_n) e.avg_fee = fee_sum / static_cast<double>(fee_n);
    if (in.quadrants) {
      const auto best = std::max_element(votes.begin(), votes.end());
      if (*best > 0) e.quadrant = static_cast<Quadrant>(best - votes.begin());
    }

    const DailySeries& v = *in.velocity;
    const double v0 = v.at(e.start);
    double v1 = kMissing;
    switch (impact) {
      case VelocityImpact::kStartToEnd:
        v1 = v.at(e.end);
        break;
      case VelocityImpact::kTrough:
        for (Date d = e.start; d <= e.end; d = d + 1) {
          const double x = v.at(d);
          if (is_missing(x)) continue;
          v1 = is_missing(v1) ? x : std::min(v1, x);
        }
        break;
      case VelocityImpact::kPost30:
        v1 = v.at(e.end + 30);
        break;
    }
    if (!is_missing(v0) && !is_missing(v1) && v0 != 0.0) e.velocity_impact = 100.0 * (v1 - v0) / v0;
    events.push_back(e);
  }
  return events;
}

Hysteresis hysteresis_degree(const DailySeries& velocity, const EventRecord& event, int longrun_horizon,
                             int pre_window, int tail_window) {
  if (pre_window < 1 || tail_window < 1 || longrun_horizon < tail_window)
    throw InputError("hysteresis_degree: need pre_window, tail_window >= 1 and horizon >= tail_window");
  if (event.end < event.start) throw InputError("hysteresis_degree: event ends before it starts");
  const Date first = event.start - pre_window;
  const Date last = event.end + longrun_horizon;
  for (Date d = first; d <= last; d = d + 1)
    if (is_missing(velocity.at(d)))
      throw InputError("hysteresis_degree: velocity undefined on " + d.to_string());

  Hysteresis h;
  for (Date d = first; d < event.start; d = d + 1) h.counterfactual += velocity.at(d);
  h.counterfactual /= pre_window;
  for (Date d = event.start; d <= event.end; d = d + 1) h.denominator += velocity.at(d) - h.counterfactual;
  double tail = 0.0;
  for (Date d = last - (tail_window - 1); d <= last; d = d + 1) tail += velocity.at(d);
  h.numerator = tail / tail_window - h.counterfactual;
  if (h.denominator == 0.0) {
    h.degenerate = true;
  } else {
    h.h = h.numerator / h.denominator;
  }
  return h;
}

ExclusionCensus exclusion_census(const DailySeries& zeta, double threshold_pct) {
  ExclusionCensus c;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    const double z = zeta[i];
    if (is_missing(z)) continue;
    ++defined;
    if (z > threshold_pct) {
      ++c.days;
      c.peak = c.peak ? std::max(*c.peak, z) : z;
    }
  }
  if (!defined) throw InputError("exclusion_census: zeta has no defined values");
  c.share = static_cast<double>(c.days) / static_cast<double>(defined);
  return c;
}

double concentration_delta(const DailySeries& realized_cap, const DailySeries& utxo_count,
                           const DailySeries& shock) {
  if (!realized_cap.same_grid(utxo_count) || !realized_cap.same_grid(shock))
    throw InputError("concentration_delta: series are not aligned");
  double sum[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < shock.size(); ++i) {
    if (is_missing(shock[i]) || is_missing(realized_cap[i]) || is_missing(utxo_count[i])) continue;
    if (utxo_count[i] <= 0.0) throw InputError("concentration_delta: non-positive UTXO count");
    const int r = shock[i] > 0.5 ? 1 : 0;
    sum[r] += realized_cap[i] / utxo_count[i];
    ++n[r];
  }
  if (!n[0] || !n[1]) throw DegenerateError("concentration_delta: a regime is empty");
  const double normal = sum[0] / static_cast<double>(n[0]);
  const double shocked = sum[1] / static_cast<double>(n[1]);
  return 100.0 * (shocked - normal) / normal;
}

DailySeries whale_divergence(const DailySeries& volume, const DailySeries& utxo_count, int z_window) {
  if (z_window < 2) throw InputError("whale_divergence: z_window must be >= 2");
  if (!volume.same_grid(utxo_count)) throw InputError("whale_divergence: series are not aligned");
  const auto w = static_cast<std::size_t>(z_window);
  auto zscore = [w](const DailySeries& s, std::size_t t) {
    double mean = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) {
      if (is_missing(s[k])) return kMissing;
      mean += s[k];
    }
    mean /= static_cast<double>(w);
    double ss = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) ss += (s[k] - mean) * (s[k] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(w - 1));
    return sd > 0.0 ? (s[t] - mean) / sd : kMissing;
  };
  std::vector<double> out(volume.size(), kMissing);
  for (std::size_t t = w - 1; t < volume.size(); ++t) {
    const double zv = zscore(volume, t);
    const double zu = zscore(utxo_count, t);
    if (!is_missing(zv) && !is_missing(zu)) out[t] = zv - zu;
  }
  return DailySeries(volume.start(), std::move(out));
}

}  // namespace frictionbreak
