#pragma once

// EV-behavior analytics across households: transaction filtering, charging
// profiles, k-means with elbow/silhouette, optimizable classification, grid
// savings and the synthetic high-potential household generator.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hems/control.hpp"
#include "hems/env.hpp"

namespace hems::analysis {

// ---------------------------------------------------------------------------
// Transaction filtering and profiles
// ---------------------------------------------------------------------------

struct FilterStats {
  std::size_t total = 0;
  std::size_t too_long = 0;
  std::size_t too_short = 0;
  std::size_t remaining = 0;

  double long_pct() const { return total ? 100.0 * static_cast<double>(too_long) / static_cast<double>(total) : 0.0; }
  double short_pct() const { return total ? 100.0 * static_cast<double>(too_short) / static_cast<double>(total) : 0.0; }
};

using TransactionsByHousehold = std::map<std::string, std::vector<ChargingTransaction>>;

/// Drops transactions longer than 48 h or shorter than 30 min.
inline TransactionsByHousehold filter_transactions(const TransactionsByHousehold& all, FilterStats* stats = nullptr,
                                                   double max_h = 48.0, double min_h = 0.5) {
  TransactionsByHousehold out;
  FilterStats s;
  for (const auto& [id, txs] : all) {
    auto& kept = out[id];
    for (const auto& tx : txs) {
      ++s.total;
      const double d = tx.duration_h();
      if (d > max_h) ++s.too_long;
      else if (d < min_h) ++s.too_short;
      else kept.push_back(tx);
    }
    if (kept.empty()) out.erase(id);
  }
  s.remaining = s.total - s.too_long - s.too_short;
  if (stats) *stats = s;
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct UserChargingProfile {
  std::string household_id;
  double mean_start_hour = 0.0;
  double mean_end_hour = 0.0;
  double mean_duration_h = 0.0;
  std::size_t transaction_count = 0;
};

/// Plain arithmetic means of hour-of-day; no circular statistics.
inline UserChargingProfile profile_of(const std::string& id, const std::vector<ChargingTransaction>& txs) {
  if (txs.empty()) throw std::invalid_argument("profile_of: household " + id + " has no transactions");
  UserChargingProfile p;
  p.household_id = id;
  for (const auto& tx : txs) {
    p.mean_start_hour += fractional_hour(tx.start);
    p.mean_end_hour += fractional_hour(tx.end);
    p.mean_duration_h += tx.duration_h();
  }
  const double n = static_cast<double>(txs.size());
  p.mean_start_hour /= n;
  p.mean_end_hour /= n;
  p.mean_duration_h /= n;
  p.transaction_count = txs.size();
  return p;
}

inline std::vector<UserChargingProfile> profiles(const TransactionsByHousehold& txs) {
  std::vector<UserChargingProfile> out;
  for (const auto& [id, list] : txs)
    if (!list.empty()) out.push_back(profile_of(id, list));
  return out;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

using Point = std::array<double, 3>;

inline double sq_dist(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Features standardized to zero mean and unit variance (a constant feature maps to 0).
inline std::vector<Point> standardize(const std::vector<UserChargingProfile>& profiles) {
  std::vector<Point> pts;
  for (const auto& p : profiles) pts.push_back({p.mean_start_hour, p.mean_end_hour, p.mean_duration_h});
  if (pts.empty()) return pts;
  for (std::size_t f = 0; f < 3; ++f) {
    double mean = 0, var = 0;
    for (const auto& p : pts) mean += p[f];
    mean /= static_cast<double>(pts.size());
    for (const auto& p : pts) var += (p[f] - mean) * (p[f] - mean);
    const double sd = std::sqrt(var / static_cast<double>(pts.size()));
    for (auto& p : pts) p[f] = sd > 0 ? (p[f] - mean) / sd : 0.0;
  }
  return pts;
}

struct ClusterResult {
  int k = 0;
  std::vector<int> assignments;
  std::vector<Point> centroids;  // standardized feature space
  double wcss = 0.0;
  std::optional<double> silhouette;         // mean; absent for k = 1
  std::vector<double> point_silhouettes;    // empty for k = 1
};

namespace detail {

inline double lloyd(const std::vector<Point>& pts, std::vector<Point>& centroids, std::vector<int>& assign,
                    int max_iter = 500) {
  const std::size_t k = centroids.size();
  assign.assign(pts.size(), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int best = 0;
      double bd = sq_dist(pts[i], centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        double d = sq_dist(pts[i], centroids[c]);
        if (d < bd) bd = d, best = static_cast<int>(c);
      }
      if (assign[i] != best) assign[i] = best, changed = true;
    }
    if (!changed) break;
    std::vector<Point> sum(k, Point{});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto c = static_cast<std::size_t>(assign[i]);
      for (std::size_t f = 0; f < 3; ++f) sum[c][f] += pts[i][f];
      ++count[c];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (count[c])
        for (std::size_t f = 0; f < 3; ++f) centroids[c][f] = sum[c][f] / static_cast<double>(count[c]);
  }
  double wcss = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) wcss += sq_dist(pts[i], centroids[static_cast<std::size_t>(assign[i])]);
  return wcss;
}

inline std::vector<Point> kmeans_pp(const std::vector<Point>& pts, int k, std::mt19937_64& rng) {
  std::vector<Point> c;
  c.push_back(pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)]);
  std::vector<double> d(pts.size());
  while (static_cast<int>(c.size()) < k) {
    double total = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d[i] = std::numeric_limits<double>::infinity();
      for (const auto& x : c) d[i] = std::min(d[i], sq_dist(pts[i], x));
      total += d[i];
    }
    if (total <= 0) {
      c.push_back(pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)]);
      continue;
    }
    double r = std::uniform_real_distribution<double>(0, total)(rng);
    std::size_t i = 0;
    for (; i + 1 < pts.size(); ++i) {
      if (r < d[i]) break;
      r -= d[i];
    }
    c.push_back(pts[i]);
  }
  return c;
}

}  // namespace detail

/// Per-point silhouette; points in singleton clusters score 0.
inline std::vector<double> silhouettes(const std::vector<Point>& pts, const std::vector<int>& assign, int k) {
  std::vector<double> s(pts.size(), 0.0);
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int a : assign) ++size[static_cast<std::size_t>(a)];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto own = static_cast<std::size_t>(assign[i]);
    if (size[own] <= 1) continue;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) sum[static_cast<std::size_t>(assign[j])] += std::sqrt(sq_dist(pts[i], pts[j]));
    const double a = sum[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c)
      if (c != own && size[c] > 0) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    s[i] = m > 0 ? (b - a) / m : 0.0;
  }
  return s;
}

inline void finish_result(const std::vector<Point>& pts, ClusterResult& r) {
  if (r.k >= 2) {
    r.point_silhouettes = silhouettes(pts, r.assignments, r.k);
    double sum = 0;
    for (double v : r.point_silhouettes) sum += v;
    r.silhouette = sum / static_cast<double>(pts.size());
  }
}

/// Best-of-restarts Lloyd clustering on standardized points. Restart r draws
/// its k-means++ seeding from seed + r, so more restarts never raise the WCSS.
inline ClusterResult kmeans_points(const std::vector<Point>& pts, int k, int restarts, std::uint64_t seed,
                                   const std::vector<Point>* warm_start = nullptr) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
  if (static_cast<std::size_t>(k) > pts.size()) throw std::invalid_argument("kmeans: k exceeds number of profiles");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be at least 1");
  ClusterResult best;
  best.k = k;
  best.wcss = std::numeric_limits<double>::infinity();
  auto consider = [&](std::vector<Point> centroids) {
    std::vector<int> assign;
    double w = detail::lloyd(pts, centroids, assign);
    if (w < best.wcss) {
      best.wcss = w;
      best.assignments = std::move(assign);
      best.centroids = std::move(centroids);
    }
  };
  if (warm_start) consider(*warm_start);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    consider(detail::kmeans_pp(pts, k, rng));
  }
  finish_result(pts, best);
  return best;
}

inline ClusterResult kmeans(const std::vector<UserChargingProfile>& profiles, int k, int restarts,
                            std::uint64_t seed) {
  return kmeans_points(standardize(profiles), k, restarts, seed);
}

struct ElbowRow {
  int k = 0;
  double wcss = 0.0;
  std::optional<double> silhouette;
};

struct ElbowResult {
  std::vector<ElbowRow> rows;
  std::vector<ClusterResult> fits;
  int best_k = 0;  // peak mean silhouette over k >= 2

  const ClusterResult& best() const { return fits.at(static_cast<std::size_t>(best_k - 1)); }
};

/// k = 1..k_max. Each k also starts from the previous centroids plus the point
/// farthest from its centroid, which keeps the WCSS non-increasing in k.
inline ElbowResult elbow_sweep(const std::vector<UserChargingProfile>& profiles, int k_max, int restarts = 20,
                               std::uint64_t seed = 0) {
  if (k_max < 2) throw std::invalid_argument("elbow_sweep: k_max must be at least 2");
  auto pts = standardize(profiles);
  k_max = std::min<int>(k_max, static_cast<int>(pts.size()));
  ElbowResult out;
  for (int k = 1; k <= k_max; ++k) {
    std::optional<std::vector<Point>> warm;
    if (k > 1) {
      const auto& prev = out.fits.back();
      std::size_t far = 0;
      double fd = -1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double d = sq_dist(pts[i], prev.centroids[static_cast<std::size_t>(prev.assignments[i])]);
        if (d > fd) fd = d, far = i;
      }
      warm = prev.centroids;
      warm->push_back(pts[far]);
    }
    out.fits.push_back(kmeans_points(pts, k, restarts, seed, warm ? &*warm : nullptr));
    const auto& f = out.fits.back();
    out.rows.push_back({k, f.wcss, f.silhouette});
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : out.rows)
    if (r.silhouette && *r.silhouette > best) best = *r.silhouette, out.best_k = r.k;
  return out;
}

inline void write_cluster_csv(std::ostream& out, const std::vector<UserChargingProfile>& profiles,
                              const ClusterResult& r) {
  out << "household,cluster,mean_start,mean_end,mean_duration,silhouette\n";
  char buf[160];
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    std::snprintf(buf, sizeof buf, ",%d,%.4f,%.4f,%.4f,", r.assignments[i], p.mean_start_hour, p.mean_end_hour,
                  p.mean_duration_h);
    out << p.household_id << buf;
    if (!r.point_silhouettes.empty()) {
      std::snprintf(buf, sizeof buf, "%.4f", r.point_silhouettes[i]);
      out << buf;
    }
    out << '\n';
  }
}

inline void write_elbow_csv(std::ostream& out, const ElbowResult& e) {
  out << "k,wcss,silhouette\n";
  char buf[96];
  for (const auto& r : e.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,", r.k, r.wcss);
    out << buf;
    if (r.silhouette) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.silhouette);
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Optimizable transactions
// ---------------------------------------------------------------------------

enum class Optimizability { Optimizable, NotOptimizable };

inline const char* optimizability_name(Optimizability o) {
  return o == Optimizability::Optimizable ? "optimizable" : "not_optimizable";
}

/// Not optimizable when the EV connects inside the daily surplus window, or
/// when the whole connection avoids every occurrence of that window.
inline Optimizability classify_optimizable(const ChargingTransaction& tx, double window_start_h = 8.0,
                                           double window_end_h = 16.0) {
  const double start_h = fractional_hour(tx.start);
  if (start_h >= window_start_h && start_h < window_end_h) return Optimizability::NotOptimizable;
  // hours measured from the midnight preceding the connection
  const double from = start_h;
  const double to = from + tx.duration_h();
  for (double day = 0; day * 24.0 < to; ++day) {
    const double ws = day * 24.0 + window_start_h, we = day * 24.0 + window_end_h;
    if (from < we && to > ws) return Optimizability::Optimizable;
  }
  return Optimizability::NotOptimizable;
}

// ---------------------------------------------------------------------------
// Grid savings
// ---------------------------------------------------------------------------

struct TransactionSavings {
  std::size_t transaction = 0;  // index into the timeline's transactions
  unsigned month = 0;           // month of the connection start
  double ev_purchase_kwh = 0.0;
  double feedin_kwh = 0.0;
  double savings_kwh = 0.0;
};

struct HouseholdSavings {
  std::string household_id;
  std::vector<TransactionSavings> transactions;
  std::map<unsigned, double> monthly_savings_kwh;
  std::map<unsigned, double> monthly_purchase_kwh;
};

/// Per transaction: min(EV-attributable grid purchase, feed-in) summed over the
/// connected steps. The trace must start at step `start` of the timeline.
inline HouseholdSavings grid_savings(const env::Timeline& tl, const std::vector<env::TraceRow>& trace, long start = 0) {
  HouseholdSavings out;
  out.household_id = tl.series().household_id;
  std::map<std::size_t, TransactionSavings> per;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const long t = start + static_cast<long>(k);
    const auto& f = trace[k].outcome.flows;
    out.monthly_purchase_kwh[month_of(trace[k].timestamp)] += f.grid_purchase_kwh;
    auto i = tl.transaction_at(t);
    if (!i) continue;
    auto& s = per[*i];
    s.transaction = *i;
    s.ev_purchase_kwh += std::min(f.ev_charge_kwh, f.grid_purchase_kwh);
    s.feedin_kwh += f.grid_feedin_kwh;
  }
  for (auto& [i, s] : per) {
    s.month = month_of(tl.series().transactions[tl.transactions()[i].index].start);
    s.savings_kwh = std::min(s.ev_purchase_kwh, s.feedin_kwh);
    out.monthly_savings_kwh[s.month] += s.savings_kwh;
    out.transactions.push_back(s);
  }
  return out;
}

struct MonthlySavings {
  unsigned month = 0;
  std::size_t households = 0;
  double mean_wh = 0.0;
  double std_wh = 0.0;
  double mean_pct = 0.0;  // of the household's grid purchase in that month
};

/// Monthly means across households that have data for the month.
inline std::vector<MonthlySavings> aggregate_monthly(const std::vector<HouseholdSavings>& households) {
  std::vector<MonthlySavings> out;
  for (unsigned m = 1; m <= 12; ++m) {
    std::vector<double> wh, pct;
    for (const auto& h : households) {
      auto p = h.monthly_purchase_kwh.find(m);
      if (p == h.monthly_purchase_kwh.end()) continue;
      auto s = h.monthly_savings_kwh.find(m);
      const double kwh = s == h.monthly_savings_kwh.end() ? 0.0 : s->second;
      wh.push_back(1000.0 * kwh);
      pct.push_back(p->second > 0 ? 100.0 * kwh / p->second : 0.0);
    }
    if (wh.empty()) continue;
    MonthlySavings r;
    r.month = m;
    r.households = wh.size();
    const double n = static_cast<double>(wh.size());
    for (std::size_t i = 0; i < wh.size(); ++i) r.mean_wh += wh[i] / n, r.mean_pct += pct[i] / n;
    if (wh.size() > 1) {
      double v = 0;
      for (double x : wh) v += (x - r.mean_wh) * (x - r.mean_wh);
      r.std_wh = std::sqrt(v / (n - 1));
    }
    out.push_back(r);
  }
  return out;
}

inline void write_savings_csv(std::ostream& out, const std::vector<MonthlySavings>& rows) {
  out << "month,households,mean_wh,std_wh,mean_pct\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%02u,%zu,%.2f,%.2f,%.4f\n", r.month, r.households, r.mean_wh, r.std_wh,
                  r.mean_pct);
    out << buf;
  }
}

struct AnnualSavings {
  double kwh = 0.0;
  double eur = 0.0;
  double kg_co2 = 0.0;
};

inline constexpr double kEmissionFactorKgPerKwh = 0.45;

inline AnnualSavings annualize_savings(double annual_kwh, const Tariff& tariff,
                                       double kg_per_kwh = kEmissionFactorKgPerKwh) {
  return {annual_kwh, annual_kwh * tariff.price_buy, annual_kwh * kg_per_kwh};
}

/// Sum of the monthly mean savings, i.e. the average household's year.
inline AnnualSavings annualize_savings(const std::vector<MonthlySavings>& monthly, const Tariff& tariff,
                                       double kg_per_kwh = kEmissionFactorKgPerKwh) {
  double kwh = 0;
  for (const auto& m : monthly) kwh += m.mean_wh / 1000.0;
  return annualize_savings(kwh, tariff, kg_per_kwh);
}

// ---------------------------------------------------------------------------
// Synthetic household
// ---------------------------------------------------------------------------

inline constexpr double kSynthPvFactor = 1.5;

/// Smallest battery of the study population.
inline TechnicalSpec synthetic_spec(TechnicalSpec base) {
  base.bess_capacity_kwh = 6.75;
  base.bess_power_kw = 3.3;
  base.pv_peak_usable_kw *= kSynthPvFactor;
  return base;
}

/// High-potential variant of a household: PV x1.5, each transaction copied to
/// the nearest free day (starts inside [08:00, 16:00) move to 07:00), smallest
/// battery. Demand is untouched. Ties between equally near days go to the later day.
inline HouseholdSeries synthesize(const HouseholdSeries& base) {
  if (auto problems = validate_household(base); !problems.empty())
    throw DataError("synthesize: base household invalid: " + problems.front());
  if (!is_midnight(base.origin())) throw DataError("synthesize: series must start at midnight");
  HouseholdSeries out = base;
  out.household_id = base.household_id + "_synth";
  out.spec = synthetic_spec(base.spec);
  for (auto& s : out.steps) s.pv_kwh *= kSynthPvFactor;

  const long n = static_cast<long>(base.size());
  const long days = n / 24;
  const Timestamp origin = base.origin();
  std::vector<bool> busy(static_cast<std::size_t>(n), false);
  auto mark = [&](const HourSpan& sp) {
    for (long t = std::max(0L, sp.first); t <= sp.last && t < n; ++t) busy[static_cast<std::size_t>(t)] = true;
  };
  auto day_free = [&](long d) {
    for (long t = d * 24; t < d * 24 + 24 && t < n; ++t)
      if (busy[static_cast<std::size_t>(t)]) return false;
    return true;
  };
  for (const auto& tx : base.transactions) mark(hour_span(tx, origin));

  for (const auto& tx : base.transactions) {
    const auto day_start = std::chrono::floor<std::chrono::days>(tx.start);
    const long home = static_cast<long>(std::chrono::duration_cast<hours>(day_start - origin).count() / 24);
    auto offset = tx.start - day_start;
    const double start_h = fractional_hour(tx.start);
    if (start_h >= 8.0 && start_h < 16.0) offset = hours{7};
    const auto length = tx.end - tx.start;
    bool placed = false;
    for (long dist = 1; dist < days && !placed; ++dist) {
      for (long d : {home + dist, home - dist}) {
        if (d < 0 || d >= days || !day_free(d)) continue;
        ChargingTransaction dup = tx;
        dup.id = tx.id + "_dup";
        dup.start = origin + hours{24 * d} + offset;
        dup.end = dup.start + length;
        if (dup.end > origin + hours{n}) continue;
        HourSpan sp = hour_span(dup, origin);
        bool clash = false;
        for (long t = sp.first; t <= sp.last; ++t) clash |= busy[static_cast<std::size_t>(t)];
        if (clash) continue;
        mark(sp);
        out.transactions.push_back(dup);
        placed = true;
        break;
      }
    }
    if (!placed) throw DataError("synthesize: no free day left for a copy of transaction " + tx.id);
  }
  std::sort(out.transactions.begin(), out.transactions.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  if (auto problems = validate_household(out); !problems.empty())
    throw DataError("synthesize: result invalid: " + problems.front());
  return out;
}

struct BaseHouseholdOptions {
  long days = 365;
  std::string origin = "2021-01-01T00:00:00";
  double pv_peak_kw = 8.0;
  double ev_capacity_kwh = 40.0;
  double arrival_hour = 6.0;
  double connection_h = 10.0;
  double energy_kwh = 20.0;
  int every_days = 2;  // leaves free days for synthesize to fill
};

/// Deterministic constructed household: seasonal bell-shaped PV with daily
/// cloudiness, a morning/evening demand profile, and a fixed EV routine.
inline HouseholdSeries generate_base_household(std::uint64_t seed, const BaseHouseholdOptions& o = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HouseholdSeries h;
  h.household_id = "base";
  h.spec.ev_capacity_kwh = o.ev_capacity_kwh;
  h.spec.pv_peak_usable_kw = o.pv_peak_kw;
  const Timestamp origin = parse_timestamp(o.origin);
  const double pi = std::acos(-1.0);
  for (long d = 0; d < o.days; ++d) {
    const Timestamp midnight = origin + hours{24 * d};
    const auto ymd = std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(midnight));
    const auto jan1 = std::chrono::sys_days(ymd.year() / std::chrono::January / 1);
    const double doy = static_cast<double>((std::chrono::floor<std::chrono::days>(midnight) - jan1).count());
    const double season = std::cos(2 * pi * (doy - 172.0) / 365.0);  // +1 midsummer
    const double half_len = 6.0 + 2.0 * season;
    const double amplitude = o.pv_peak_kw * (0.55 + 0.45 * season) * (0.3 + 0.7 * u(rng));
    for (int hr = 0; hr < 24; ++hr) {
      const double x = (hr + 0.5 - 12.5) / half_len;
      const double pv = std::abs(x) < 1.0 ? amplitude * (1.0 - x * x) * (0.9 + 0.1 * u(rng)) : 0.0;
      double demand = 0.25;
      if (hr >= 6 && hr < 9) demand += 0.5;
      if (hr >= 17 && hr < 22) demand += 0.8;
      demand *= 0.7 + 0.6 * u(rng);
      h.steps.push_back({midnight + hours{hr}, pv, demand});
    }
    if (d % o.every_days == 0 && d + 1 < o.days) {
      ChargingTransaction tx;
      tx.id = "ev" + std::to_string(d);
      tx.start = midnight + std::chrono::seconds(static_cast<long>(o.arrival_hour * 3600));
      tx.end = tx.start + std::chrono::seconds(static_cast<long>(o.connection_h * 3600));
      tx.energy_kwh = o.energy_kwh;
      h.transactions.push_back(tx);
    }
  }
  return h;
}

}  // namespace hems::analysis
