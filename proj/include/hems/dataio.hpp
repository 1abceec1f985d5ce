#pragma once

// Measurement ingestion, hourly resampling, gap filling, transaction
// derivation, capacity inference and transaction-preserving splits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hems/domain.hpp"

namespace hems::dataio {

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& text, std::size_t line_no, const std::string& column) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + text + "' in column " +
                    column);
  }
}

/// Maps header names to positions; every name must be in `known`, and every
/// name in `required` must be present.
inline std::map<std::string, std::size_t> read_header(const std::string& line,
                                                      const std::vector<std::string>& known,
                                                      const std::vector<std::string>& required) {
  std::map<std::string, std::size_t> index;
  auto cells = split_csv_line(line);
  if (!cells.empty() && cells[0].rfind("\xEF\xBB\xBF", 0) == 0) cells[0].erase(0, 3);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (std::find(known.begin(), known.end(), cells[i]) == known.end())
      throw DataError("line 1: unknown column '" + cells[i] + "'");
    index[cells[i]] = i;
  }
  for (const auto& name : required)
    if (!index.contains(name)) throw DataError("line 1: missing column '" + name + "'");
  return index;
}

// ---------------------------------------------------------------------------
// Raw measurements
// ---------------------------------------------------------------------------

struct RawMeasurement {
  Timestamp timestamp{};
  std::string household_id;
  double pv_power_w = 0.0;
  double total_load_w = 0.0;
  double ev_load_w = 0.0;
  std::string transaction_id;  // empty when absent
};

/// Parses a measurement CSV. Records are sorted by household, then timestamp.
inline std::vector<RawMeasurement> ingest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty measurement file");
  const std::vector<std::string> cols{"timestamp", "household_id", "pv_w",
                                      "load_w",    "ev_w",         "transaction_id"};
  auto header = read_header(line, cols, {"timestamp", "household_id", "pv_w", "load_w", "ev_w"});
  std::vector<RawMeasurement> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    RawMeasurement m;
    try {
      m.timestamp = parse_timestamp(cells[header.at("timestamp")]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (std::chrono::duration_cast<std::chrono::seconds>(m.timestamp.time_since_epoch()).count() %
            900 != 0)
      throw DataError("line " + std::to_string(line_no) + ": timestamp off the 15-minute grid");
    m.household_id = cells[header.at("household_id")];
    m.pv_power_w = parse_number(cells[header.at("pv_w")], line_no, "pv_w");
    m.total_load_w = parse_number(cells[header.at("load_w")], line_no, "load_w");
    m.ev_load_w = parse_number(cells[header.at("ev_w")], line_no, "ev_w");
    if (m.pv_power_w < 0 || m.total_load_w < 0 || m.ev_load_w < 0)
      throw DataError("line " + std::to_string(line_no) + ": negative power reading");
    if (header.contains("transaction_id")) m.transaction_id = cells[header.at("transaction_id")];
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.household_id, a.timestamp) < std::tie(b.household_id, b.timestamp);
  });
  return out;
}

inline std::map<std::string, std::vector<RawMeasurement>> by_household(
    const std::vector<RawMeasurement>& raw) {
  std::map<std::string, std::vector<RawMeasurement>> groups;
  for (const auto& m : raw) groups[m.household_id].push_back(m);
  return groups;
}

// ---------------------------------------------------------------------------
// Hourly resampling and gap filling
// ---------------------------------------------------------------------------

/// Hourly energies per channel; NaN marks an hour that did not have four
/// quarter-hour readings.
struct HourlyChannels {
  std::string household_id;
  Timestamp origin{};
  std::vector<double> pv_kwh;
  std::vector<double> load_kwh;
  std::vector<double> ev_kwh;

  std::size_t size() const { return pv_kwh.size(); }
  bool missing(std::size_t i) const { return std::isnan(pv_kwh[i]); }
};

/// Mean power of the four quarter-hour slots times one hour, per channel.
/// `raw` must belong to a single household.
inline HourlyChannels resample_hourly(const std::vector<RawMeasurement>& raw) {
  HourlyChannels out;
  if (raw.empty()) return out;
  out.household_id = raw.front().household_id;
  auto sorted = raw;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  const Timestamp first = std::chrono::floor<hours>(sorted.front().timestamp);
  const Timestamp last = std::chrono::floor<hours>(sorted.back().timestamp);
  out.origin = first;
  const auto n = static_cast<std::size_t>((last - first) / hours{1}) + 1;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::array<double, 3>> sums(n, {0.0, 0.0, 0.0});
  std::vector<unsigned> slot_mask(n, 0);
  for (const auto& m : sorted) {
    if (m.household_id != out.household_id)
      throw DataError("resample_hourly expects a single household");
    auto h = static_cast<std::size_t>((std::chrono::floor<hours>(m.timestamp) - first) / hours{1});
    auto slot = static_cast<unsigned>((m.timestamp - std::chrono::floor<hours>(m.timestamp)) /
                                      std::chrono::minutes{15});
    if (slot_mask[h] & (1u << slot)) continue;  // duplicate reading
    slot_mask[h] |= 1u << slot;
    sums[h][0] += m.pv_power_w;
    sums[h][1] += m.total_load_w;
    sums[h][2] += m.ev_load_w;
  }
  out.pv_kwh.resize(n);
  out.load_kwh.resize(n);
  out.ev_kwh.resize(n);
  for (std::size_t h = 0; h < n; ++h) {
    bool complete = slot_mask[h] == 0b1111;
    out.pv_kwh[h] = complete ? sums[h][0] / 4.0 / 1000.0 : nan;
    out.load_kwh[h] = complete ? sums[h][1] / 4.0 / 1000.0 : nan;
    out.ev_kwh[h] = complete ? sums[h][2] / 4.0 / 1000.0 : nan;
  }
  return out;
}

namespace detail {

inline double lagrange3(const std::array<double, 3>& xs, const std::array<double, 3>& ys, double x) {
  double result = 0.0;
  for (int i = 0; i < 3; ++i) {
    double term = ys[i];
    for (int j = 0; j < 3; ++j)
      if (j != i) term *= (x - xs[j]) / (xs[i] - xs[j]);
    result += term;
  }
  return result;
}

}  // namespace detail

/// Fills interior gaps of at most `max_gap_h` hours with a parabola through the
/// two flanking valid hours and the nearest further valid hour; results are
/// clamped at zero. Longer or unbounded gaps throw DataError.
inline HourlyChannels fill_gaps(HourlyChannels series, std::size_t max_gap_h = 5) {
  const std::size_t n = series.size();
  std::size_t i = 0;
  while (i < n) {
    if (!series.missing(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && series.missing(j)) ++j;
    const std::size_t gap = j - i;
    if (i == 0 || j == n)
      throw DataError("household " + series.household_id + ": gap of " + std::to_string(gap) +
                      " h at the series edge");
    if (gap > max_gap_h)
      throw DataError("household " + series.household_id + ": gap of " + std::to_string(gap) +
                      " h at " + format_timestamp(series.origin + hours{static_cast<long>(i)}) +
                      " exceeds " + std::to_string(max_gap_h) + " h");
    const long left = static_cast<long>(i) - 1;
    const long right = static_cast<long>(j);
    // nearest valid hour beyond either flank; ties prefer the left side
    long third = -1;
    for (long d = 1; third < 0 && (left - d >= 0 || right + d < static_cast<long>(n)); ++d) {
      if (left - d >= 0 && !series.missing(static_cast<std::size_t>(left - d)))
        third = left - d;
      else if (right + d < static_cast<long>(n) &&
               !series.missing(static_cast<std::size_t>(right + d)))
        third = right + d;
    }
    for (auto* channel : {&series.pv_kwh, &series.load_kwh, &series.ev_kwh}) {
      auto& v = *channel;
      for (std::size_t k = i; k < j; ++k) {
        double x = static_cast<double>(k);
        double value;
        if (third < 0) {
          double w = (x - left) / static_cast<double>(right - left);
          value = v[left] + w * (v[right] - v[left]);
        } else {
          std::array<double, 3> xs{static_cast<double>(left), static_cast<double>(right),
                                   static_cast<double>(third)};
          std::array<double, 3> ys{v[left], v[right], v[third]};
          value = detail::lagrange3(xs, ys, x);
        }
        v[k] = std::max(0.0, value);
      }
    }
    i = j;
  }
  return series;
}

/// Household demand excludes EV charging: the load channel is total site load.
inline std::vector<HourStep> to_steps(const HourlyChannels& ch) {
  std::vector<HourStep> steps(ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (ch.missing(i)) throw DataError("to_steps: unfilled gap");
    steps[i] = {ch.origin + hours{static_cast<long>(i)}, ch.pv_kwh[i],
                std::max(0.0, ch.load_kwh[i] - ch.ev_kwh[i])};
  }
  return steps;
}

// ---------------------------------------------------------------------------
// Transactions and capacities
// ---------------------------------------------------------------------------

/// Uses transaction ids when present, otherwise contiguous runs of EV load.
inline std::vector<ChargingTransaction> derive_transactions(const std::vector<RawMeasurement>& raw) {
  using std::chrono::minutes;
  std::vector<ChargingTransaction> out;
  bool has_ids = std::any_of(raw.begin(), raw.end(),
                             [](const auto& m) { return !m.transaction_id.empty(); });
  if (has_ids) {
    std::map<std::string, ChargingTransaction> by_id;
    for (const auto& m : raw) {
      if (m.transaction_id.empty()) continue;
      auto [it, inserted] = by_id.try_emplace(m.transaction_id);
      auto& tx = it->second;
      if (inserted) {
        tx.id = m.transaction_id;
        tx.start = m.timestamp;
        tx.end = m.timestamp + minutes{15};
      }
      tx.start = std::min(tx.start, m.timestamp);
      tx.end = std::max(tx.end, m.timestamp + minutes{15});
      tx.energy_kwh += m.ev_load_w * 0.25 / 1000.0;
    }
    for (auto& [id, tx] : by_id) out.push_back(tx);
  } else {
    std::optional<ChargingTransaction> open;
    int counter = 0;
    for (const auto& m : raw) {
      bool charging = m.ev_load_w > 0.0;
      if (open && (!charging || m.timestamp != open->end)) {
        out.push_back(*open);
        open.reset();
      }
      if (charging) {
        if (!open) {
          open = ChargingTransaction{};
          open->id = std::to_string(++counter);
          open->start = m.timestamp;
          open->end = m.timestamp;
        }
        open->end = m.timestamp + minutes{15};
        open->energy_kwh += m.ev_load_w * 0.25 / 1000.0;
      }
    }
    if (open) out.push_back(*open);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

/// Usable EV capacity: the largest energy charged in any transaction.
inline double infer_ev_capacity(const std::vector<ChargingTransaction>& transactions) {
  if (transactions.empty()) throw DataError("infer_ev_capacity: no transactions");
  double best = 0.0;
  for (const auto& tx : transactions) best = std::max(best, tx.energy_kwh);
  return best;
}

/// Usable PV peak in kW: the largest quarter-hour PV reading.
inline double infer_pv_peak(const std::vector<RawMeasurement>& raw) {
  if (raw.empty()) throw DataError("infer_pv_peak: empty series");
  double best = 0.0;
  for (const auto& m : raw) best = std::max(best, m.pv_power_w);
  return best / 1000.0;
}

/// SoC at plug-in such that charging to full consumes exactly the observed energy.
inline double start_soc(double energy_kwh, double ev_capacity_kwh) {
  if (energy_kwh > ev_capacity_kwh + 1e-12)
    throw DataError("transaction energy exceeds ev capacity");
  return std::max(0.0, ev_capacity_kwh - energy_kwh);
}

inline double start_soc_fraction(double energy_kwh, double ev_capacity_kwh) {
  return start_soc(energy_kwh, ev_capacity_kwh) / ev_capacity_kwh;
}

inline double start_soc(const ChargingTransaction& tx, double ev_capacity_kwh) {
  return tx.start_soc_kwh ? *tx.start_soc_kwh : start_soc(tx.energy_kwh, ev_capacity_kwh);
}

/// One household's raw readings to a validated hourly series: resampling, gap
/// filling, demand net of EV load, transactions (derived unless given) and the
/// inferred EV capacity and PV peak.
inline HouseholdSeries assemble_household(const std::vector<RawMeasurement>& raw,
                                          const std::optional<std::vector<ChargingTransaction>>& transactions = {},
                                          std::size_t max_gap_h = 5) {
  if (raw.empty()) throw DataError("assemble_household: no readings");
  HouseholdSeries h;
  h.household_id = raw.front().household_id;
  h.steps = to_steps(fill_gaps(resample_hourly(raw), max_gap_h));
  h.transactions = transactions ? *transactions : derive_transactions(raw);
  std::sort(h.transactions.begin(), h.transactions.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  if (!h.transactions.empty()) h.spec.ev_capacity_kwh = infer_ev_capacity(h.transactions);
  const double peak = infer_pv_peak(raw);
  if (peak > 0) h.spec.pv_peak_usable_kw = peak;
  if (auto problems = validate_household(h); !problems.empty())
    throw DataError("household " + h.household_id + ": " + problems.front());
  return h;
}

/// Reads `household_id,transaction_id,start,end,energy_kwh`, grouped by household.
inline std::map<std::string, std::vector<ChargingTransaction>> read_transactions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty transaction file");
  const std::vector<std::string> cols{"household_id", "transaction_id", "start", "end", "energy_kwh"};
  auto header = read_header(line, cols, cols);
  std::map<std::string, std::vector<ChargingTransaction>> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": wrong field count");
    ChargingTransaction tx;
    tx.id = cells[header.at("transaction_id")];
    try {
      tx.start = parse_timestamp(cells[header.at("start")]);
      tx.end = parse_timestamp(cells[header.at("end")]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    tx.energy_kwh = parse_number(cells[header.at("energy_kwh")], line_no, "energy_kwh");
    if (!(tx.end > tx.start) || tx.energy_kwh < 0)
      throw DataError("line " + std::to_string(line_no) + ": invalid transaction");
    out[cells[header.at("household_id")]].push_back(tx);
  }
  for (auto& [id, list] : out)
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

inline void write_transactions(std::ostream& out, const std::string& household_id,
                               const std::vector<ChargingTransaction>& transactions,
                               bool header = true) {
  if (header) out << "household_id,transaction_id,start,end,energy_kwh\n";
  char buf[64];
  for (const auto& tx : transactions) {
    std::snprintf(buf, sizeof buf, "%.17g", tx.energy_kwh);
    out << household_id << ',' << tx.id << ',' << format_timestamp(tx.start) << ','
        << format_timestamp(tx.end) << ',' << buf << '\n';
  }
}

// ---------------------------------------------------------------------------
// Per-step EV state of charge
// ---------------------------------------------------------------------------

/// SoC values at the hour boundaries of a transaction spanning `hours_connected`
/// steps: `hours_connected + 1` values from start to end.
inline std::vector<double> soc_profile(double start_kwh, double end_kwh, long hours_connected) {
  std::vector<double> out(static_cast<std::size_t>(hours_connected) + 1);
  for (long k = 0; k <= hours_connected; ++k)
    out[static_cast<std::size_t>(k)] =
        start_kwh + (end_kwh - start_kwh) * static_cast<double>(k) / static_cast<double>(hours_connected);
  return out;
}

/// EV SoC in kWh at the start of every step: linear within each transaction
/// between its start SoC and start SoC plus charged energy, full capacity
/// outside transactions.
inline std::vector<double> interpolate_ev_soc(const HouseholdSeries& series) {
  const double cap = series.spec.ev_capacity_kwh;
  std::vector<double> soc(series.size(), cap);
  for (const auto& tx : series.transactions) {
    HourSpan span = hour_span(tx, series.origin());
    double from = start_soc(tx, cap);
    double to = std::min(cap, from + tx.energy_kwh);
    auto profile = soc_profile(from, to, span.length());
    for (long t = span.first; t <= span.last; ++t)
      if (t >= 0 && t < static_cast<long>(soc.size()))
        soc[static_cast<std::size_t>(t)] = profile[static_cast<std::size_t>(t - span.first)];
  }
  return soc;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

enum class Role { Train = 0, Eval = 1, Test = 2 };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Train: return "train";
    case Role::Eval: return "eval";
    case Role::Test: return "test";
  }
  return "?";
}

inline Role parse_role(const std::string& s) {
  if (s == "train") return Role::Train;
  if (s == "eval") return Role::Eval;
  if (s == "test") return Role::Test;
  throw std::invalid_argument("unknown split role '" + s + "'");
}

struct SplitConfig {
  std::array<int, 3> total_days{180, 60, 125};
  std::array<int, 3> segment_days{15, 5, 10};
};

struct Segment {
  Role role = Role::Train;
  long start = 0;  // step index, inclusive
  long end = 0;    // step index, exclusive
  long days() const { return (end - start) / 24; }
};

struct SplitPlan {
  std::vector<Segment> segments;

  std::vector<Segment> of_role(Role role) const {
    std::vector<Segment> out;
    for (const auto& s : segments)
      if (s.role == role) out.push_back(s);
    return out;
  }
  long days(Role role) const {
    long total = 0;
    for (const auto& s : segments)
      if (s.role == role) total += s.days();
    return total;
  }
};

/// Step indices at which a transaction is connected on both sides of a
/// midnight, i.e. midnights that must not become segment boundaries.
inline std::vector<bool> blocked_midnights(const HouseholdSeries& series, long days) {
  std::vector<bool> blocked(static_cast<std::size_t>(days) + 1, false);
  for (const auto& tx : series.transactions) {
    HourSpan span = hour_span(tx, series.origin());
    for (long d = std::max(1L, span.first / 24); d * 24 <= span.last && d <= days; ++d)
      if (span.first < d * 24 && d * 24 <= span.last) blocked[static_cast<std::size_t>(d)] = true;
  }
  return blocked;
}

/// Repeating train/eval/test segments cut at midnights that no transaction
/// spans. Shifted boundaries are compensated by later segments of the same role
/// so that the per-role day totals come out exact.
inline SplitPlan split(const HouseholdSeries& series, const SplitConfig& cfg = {}) {
  if (series.steps.empty() || !is_midnight(series.origin()))
    throw DataError("split: series must start at midnight");
  if (series.size() % 24 != 0) throw DataError("split: series must cover whole days");
  const long days = static_cast<long>(series.size() / 24);
  const long wanted = cfg.total_days[0] + cfg.total_days[1] + cfg.total_days[2];
  if (days != wanted)
    throw DataError("split: series has " + std::to_string(days) + " days, plan needs " +
                    std::to_string(wanted));

  // nominal pattern
  std::vector<std::pair<Role, long>> nominal;
  std::array<long, 3> remaining{cfg.total_days[0], cfg.total_days[1], cfg.total_days[2]};
  while (remaining[0] + remaining[1] + remaining[2] > 0) {
    for (int r = 0; r < 3; ++r) {
      long len = std::min<long>(cfg.segment_days[static_cast<std::size_t>(r)],
                                remaining[static_cast<std::size_t>(r)]);
      if (len <= 0) continue;
      remaining[static_cast<std::size_t>(r)] -= len;
      if (!nominal.empty() && nominal.back().first == static_cast<Role>(r))
        nominal.back().second += len;
      else
        nominal.emplace_back(static_cast<Role>(r), len);
    }
  }

  auto blocked = blocked_midnights(series, days);
  auto free_at = [&](long d) { return d > 0 && d < days && !blocked[static_cast<std::size_t>(d)]; };

  // Depth-first search over boundary days. Each boundary prefers its nominal
  // day plus the days its role still owes, then later free midnights, then
  // earlier ones; dead ends are memoized so the search stays linear in practice.
  const long window = 2 * *std::max_element(cfg.segment_days.begin(), cfg.segment_days.end());
  const std::size_t count = nominal.size();
  std::vector<long> ends(count);
  std::unordered_set<std::uint64_t> dead;
  auto key = [&](std::size_t i, long day, const std::array<long, 3>& owed) {
    return (static_cast<std::uint64_t>(i) << 48) ^ (static_cast<std::uint64_t>(day) << 32) ^
           (static_cast<std::uint64_t>(owed[0] + 1024) << 16) ^ static_cast<std::uint64_t>(owed[1] + 1024);
  };
  std::function<bool(std::size_t, long, std::array<long, 3>)> place =
      [&](std::size_t i, long day, std::array<long, 3> owed) -> bool {
    auto [role, len] = nominal[i];
    auto r = static_cast<std::size_t>(role);
    if (i + 1 == count) {
      owed[r] += len - (days - day);
      ends[i] = days;
      return owed == std::array<long, 3>{0, 0, 0} && days > day;
    }
    if (dead.contains(key(i, day, owed))) return false;
    const long desired = std::max(day + 1, day + len + owed[r]);
    std::vector<long> candidates;
    for (long off = 0; off <= window; ++off) candidates.push_back(desired + off);
    for (long off = 1; off <= window; ++off) candidates.push_back(desired - off);
    for (long end : candidates) {
      if (end <= day || !free_at(end)) continue;
      auto next = owed;
      next[r] += len - (end - day);
      if (std::abs(next[r]) > window) continue;
      ends[i] = end;
      if (place(i + 1, end, next)) return true;
    }
    dead.insert(key(i, day, owed));
    return false;
  };
  if (!place(0, 0, {0, 0, 0})) throw DataError("split: transactions prevent exact day totals");

  SplitPlan plan;
  long day = 0;
  for (std::size_t i = 0; i < count; ++i) {
    Segment seg{nominal[i].first, day * 24, ends[i] * 24};
    if (!plan.segments.empty() && plan.segments.back().role == seg.role)
      plan.segments.back().end = seg.end;
    else
      plan.segments.push_back(seg);
    day = ends[i];
  }
  for (int r = 0; r < 3; ++r)
    if (plan.days(static_cast<Role>(r)) != cfg.total_days[static_cast<std::size_t>(r)])
      throw std::logic_error("split: day totals drifted");
  return plan;
}

inline std::string split_plan_json(const SplitPlan& plan, Timestamp origin) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : plan.segments)
    arr.push_back({{"role", role_name(s.role)},
                   {"start", format_timestamp(origin + hours{s.start})},
                   {"end", format_timestamp(origin + hours{s.end})}});
  return arr.dump(2);
}

inline SplitPlan parse_split_plan_json(const std::string& text, Timestamp origin) {
  SplitPlan plan;
  for (const auto& item : nlohmann::json::parse(text)) {
    Segment s;
    s.role = parse_role(item.at("role").get<std::string>());
    s.start = (parse_timestamp(item.at("start").get<std::string>()) - origin) / hours{1};
    s.end = (parse_timestamp(item.at("end").get<std::string>()) - origin) / hours{1};
    plan.segments.push_back(s);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Household directory: hourly.csv, transactions.csv, spec.ini
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> values;
  CLI::ConfigBase parser;
  for (const auto& item : parser.from_config(in)) {
    if (item.name == "++" || item.name == "--" || item.inputs.empty()) continue;
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    key += item.name;
    std::string joined;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) joined += (i ? "," : "") + item.inputs[i];
    values[key] = joined;
  }
  return values;
}

}  // namespace detail

inline void write_spec(std::ostream& out, const TechnicalSpec& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "[technical]\nbess_capacity_kwh = %.17g\nbess_power_kw = %.17g\n"
                "bess_efficiency = %.17g\nbess_standing_loss_per_hour = %.17g\n"
                "ev_capacity_kwh = %.17g\nev_charger_power_kw = %.17g\npv_peak_usable_kw = %.17g\n",
                s.bess_capacity_kwh, s.bess_power_kw, s.bess_efficiency,
                s.bess_standing_loss_per_hour, s.ev_capacity_kwh, s.ev_charger_power_kw,
                s.pv_peak_usable_kw);
  out << buf;
}

inline TechnicalSpec read_spec(std::istream& in) {
  TechnicalSpec s;
  auto kv = detail::read_key_values(in);
  auto get = [&](const char* key, double& field) {
    auto it = kv.find(std::string("technical.") + key);
    if (it != kv.end()) field = std::stod(it->second);
  };
  get("bess_capacity_kwh", s.bess_capacity_kwh);
  get("bess_power_kw", s.bess_power_kw);
  get("bess_efficiency", s.bess_efficiency);
  get("bess_standing_loss_per_hour", s.bess_standing_loss_per_hour);
  get("ev_capacity_kwh", s.ev_capacity_kwh);
  get("ev_charger_power_kw", s.ev_charger_power_kw);
  get("pv_peak_usable_kw", s.pv_peak_usable_kw);
  s.validate();
  return s;
}

inline void write_household(const std::filesystem::path& dir, const HouseholdSeries& series) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "hourly.csv");
    out << "timestamp,pv_kwh,demand_kwh\n";
    char buf[96];
    for (const auto& s : series.steps) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", s.pv_kwh, s.demand_kwh);
      out << format_timestamp(s.timestamp) << buf;
    }
  }
  {
    std::ofstream out(dir / "transactions.csv");
    write_transactions(out, series.household_id, series.transactions);
  }
  {
    std::ofstream out(dir / "spec.ini");
    out << "household_id = \"" << series.household_id << "\"\n";
    write_spec(out, series.spec);
  }
}

inline HouseholdSeries read_household(const std::filesystem::path& dir) {
  HouseholdSeries series;
  {
    std::ifstream in(dir / "spec.ini");
    if (!in) throw DataError("missing " + (dir / "spec.ini").string());
    std::stringstream copy;
    copy << in.rdbuf();
    auto kv = detail::read_key_values(copy);
    if (kv.contains("household_id")) series.household_id = kv["household_id"];
    copy.clear();
    copy.seekg(0);
    series.spec = read_spec(copy);
  }
  {
    std::ifstream in(dir / "hourly.csv");
    if (!in) throw DataError("missing " + (dir / "hourly.csv").string());
    std::string line;
    std::getline(in, line);
    auto header = read_header(line, {"timestamp", "pv_kwh", "demand_kwh"},
                              {"timestamp", "pv_kwh", "demand_kwh"});
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      if (cells.size() != 3) throw DataError("hourly.csv line " + std::to_string(line_no));
      series.steps.push_back({parse_timestamp(cells[header["timestamp"]]),
                              parse_number(cells[header["pv_kwh"]], line_no, "pv_kwh"),
                              parse_number(cells[header["demand_kwh"]], line_no, "demand_kwh")});
    }
  }
  {
    std::ifstream in(dir / "transactions.csv");
    if (in) {
      auto all = read_transactions(in);
      for (auto& [id, list] : all)
        series.transactions.insert(series.transactions.end(), list.begin(), list.end());
      std::sort(series.transactions.begin(), series.transactions.end(),
                [](const auto& a, const auto& b) { return a.start < b.start; });
    }
  }
  return series;
}

}  // namespace hems::dataio
