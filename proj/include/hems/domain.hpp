#pragma once

// Shared value types for the household energy toolkit: tariffs, device
// specifications, hourly series, charging transactions and the MDP state.
// Energies are kWh at one-hour resolution, prices are EUR per kWh.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hems {

using Timestamp = std::chrono::sys_seconds;
using std::chrono::hours;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Time helpers
// ---------------------------------------------------------------------------

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS][Z]`. Throws DataError on malformed input.
inline Timestamp parse_timestamp(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
  if (n < 6 || (sep != 'T' && sep != ' '))
    throw DataError("malformed timestamp '" + text + "'");
  std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == ':') {
    int more = 0;
    if (std::sscanf(rest.c_str(), ":%d%n", &s, &more) != 1)
      throw DataError("malformed timestamp '" + text + "'");
    rest = rest.substr(static_cast<std::size_t>(more));
  }
  if (!rest.empty() && rest != "Z")
    throw DataError("malformed timestamp '" + text + "'");
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
    throw DataError("timestamp out of range '" + text + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

inline std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  auto day_start = floor<days>(ts);
  year_month_day ymd{day_start};
  hh_mm_ss hms{ts - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

inline std::string format_date(Timestamp ts) { return format_timestamp(ts).substr(0, 10); }

inline int hour_of_day(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<int>(duration_cast<hours>(ts - floor<days>(ts)).count());
}

/// Fractional hour of day in [0, 24).
inline double fractional_hour(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<double>((ts - floor<days>(ts)).count()) / 3600.0;
}

inline unsigned month_of(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<unsigned>(year_month_day{floor<days>(ts)}.month());
}

inline bool is_midnight(Timestamp ts) { return ts == std::chrono::floor<std::chrono::days>(ts); }

/// Meteorological season: Dec-Feb = 0, Mar-May = 1, Jun-Aug = 2, Sep-Nov = 3.
inline int season_of(Timestamp ts) { return static_cast<int>((month_of(ts) % 12) / 3); }

// ---------------------------------------------------------------------------
// Tariff and technical specification
// ---------------------------------------------------------------------------

struct Tariff {
  double price_buy = 0.40;
  double price_sell = 0.08;

  void validate() const {
    if (!(price_buy > price_sell && price_sell >= 0.0))
      throw std::invalid_argument("tariff requires price_buy > price_sell >= 0");
  }

  /// Reference tariff (0.40 / 0.08).
  static Tariff table() { return {0.40, 0.08}; }
  /// Prices quoted in the day-trace discussion (0.41 / 0.09).
  static Tariff sec53() { return {0.41, 0.09}; }
  static Tariff preset(const std::string& name) {
    if (name == "table") return table();
    if (name == "sec53") return sec53();
    throw std::invalid_argument("unknown tariff preset '" + name + "'");
  }
};

struct TechnicalSpec {
  double bess_capacity_kwh = 6.75;
  double bess_power_kw = 3.3;
  double bess_efficiency = 0.95;
  double bess_standing_loss_per_hour = 0.00003;  // 0.003 %
  double ev_capacity_kwh = 40.0;
  double ev_charger_power_kw = 11.0;
  double pv_peak_usable_kw = 10.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(bess_capacity_kwh, "bess_capacity_kwh");
    positive(bess_power_kw, "bess_power_kw");
    positive(ev_capacity_kwh, "ev_capacity_kwh");
    positive(ev_charger_power_kw, "ev_charger_power_kw");
    positive(pv_peak_usable_kw, "pv_peak_usable_kw");
    if (!(bess_efficiency > 0.0 && bess_efficiency <= 1.0))
      throw std::invalid_argument("bess_efficiency must lie in (0, 1]");
    if (!(bess_standing_loss_per_hour >= 0.0 && bess_standing_loss_per_hour < 1.0))
      throw std::invalid_argument("bess_standing_loss_per_hour must lie in [0, 1)");
  }
};

// ---------------------------------------------------------------------------
// Series
// ---------------------------------------------------------------------------

struct HourStep {
  Timestamp timestamp{};
  double pv_kwh = 0.0;
  double demand_kwh = 0.0;
};

struct ChargingTransaction {
  std::string id;
  Timestamp start{};
  Timestamp end{};
  double energy_kwh = 0.0;
  std::optional<double> start_soc_kwh;

  double duration_h() const {
    return static_cast<double>((end - start).count()) / 3600.0;
  }
};

struct HouseholdSeries {
  std::string household_id;
  std::vector<HourStep> steps;
  std::vector<ChargingTransaction> transactions;
  TechnicalSpec spec;

  std::size_t size() const { return steps.size(); }
  Timestamp origin() const { return steps.empty() ? Timestamp{} : steps.front().timestamp; }
};

/// Hour-resolution extent of a transaction relative to a series origin:
/// the EV counts as connected during every hour that overlaps [start, end).
struct HourSpan {
  long first = 0;  // first connected step
  long last = 0;   // final connected step (disconnects at its end)

  long length() const { return last - first + 1; }
  bool contains(long t) const { return t >= first && t <= last; }
};

inline HourSpan hour_span(const ChargingTransaction& tx, Timestamp origin) {
  using namespace std::chrono;
  auto from = duration_cast<seconds>(tx.start - origin).count();
  auto to = duration_cast<seconds>(tx.end - origin).count();
  auto floor_div = [](long long a, long long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  long first = static_cast<long>(floor_div(from, 3600));
  long last = static_cast<long>(floor_div(to + 3599, 3600)) - 1;
  if (last < first) last = first;
  return {first, last};
}

// ---------------------------------------------------------------------------
// MDP state and action
// ---------------------------------------------------------------------------

inline constexpr std::size_t kStateFeatures = 8;
inline constexpr std::size_t kActionSize = 2;
using StateFeatures = std::array<double, kStateFeatures>;

struct SimState {
  double soc_b_kwh = 0.0;
  double soc_ev_kwh = 0.0;
  bool connected = false;
  int countdown_h = -1;
  double hour_cos = 1.0;
  double hour_sin = 0.0;
  int season = 0;
  double demand_kwh = 0.0;
  double pv_kwh = 0.0;
  Timestamp timestamp{};

  /// True on the final connected hour of a transaction.
  bool disconnects_now() const { return connected && countdown_h == 0; }

  double ev_fraction(const TechnicalSpec& spec) const {
    return connected ? soc_ev_kwh / spec.ev_capacity_kwh : 1.0;
  }

  /// Network-facing features: [soc_b, soc_ev, countdown, cos, sin, season, demand, pv].
  StateFeatures features(const TechnicalSpec& spec) const {
    return {soc_b_kwh / spec.bess_capacity_kwh,
            ev_fraction(spec),
            static_cast<double>(countdown_h),
            hour_cos,
            hour_sin,
            season / 3.0,
            demand_kwh,
            pv_kwh};
  }
};

inline std::pair<double, double> hour_encoding(int hour) {
  double angle = 2.0 * std::numbers::pi * hour / 24.0;
  return {std::cos(angle), std::sin(angle)};
}

/// Inverse of hour_encoding.
inline int hour_from_encoding(double cos_v, double sin_v) {
  double angle = std::atan2(sin_v, cos_v);
  if (angle < 0) angle += 2.0 * std::numbers::pi;
  int h = static_cast<int>(std::lround(angle * 24.0 / (2.0 * std::numbers::pi)));
  return h % 24;
}

struct Action {
  double target_bess = 0.0;
  double target_ev = 1.0;

  /// Maps a saturated actor output in [-1, 1]^2 onto targets in [0, 1]^2.
  static Action from_actor(double a_bess, double a_ev) {
    auto map = [](double a) { return (std::clamp(a, -1.0, 1.0) + 1.0) / 2.0; };
    return {map(a_bess), map(a_ev)};
  }
};

struct EnergyFlows {
  double ev_charge_kwh = 0.0;
  double bess_charge_kwh = 0.0;
  double bess_discharge_kwh = 0.0;
  double grid_purchase_kwh = 0.0;
  double grid_purchase_ev_kwh = 0.0;  // share of the purchase attributed to EV charging
  double grid_feedin_kwh = 0.0;
  double external_ev_kwh = 0.0;

  double grid_purchase_demand_kwh() const { return grid_purchase_kwh - grid_purchase_ev_kwh; }
};

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

enum class NoiseKind { Gaussian, OrnsteinUhlenbeck };
enum class DiscomfortKind { Quadratic, Linear };

struct TrainConfig {
  int episodes = 1001;
  int episode_len_h = 72;
  int batch = 120;
  int buffer = 24000;
  double lr_actor = 0.0001;
  double lr_critic = 0.001;
  double soft_update = 0.001;
  double discount = 0.99;
  std::array<int, 2> net_sizes{300, 600};
  NoiseKind noise_kind = NoiseKind::Gaussian;
  double noise_scale = 0.1;
  double ou_theta = 0.15;
  double ou_mu = 0.0;
  DiscomfortKind discomfort_kind = DiscomfortKind::Quadratic;
  double discomfort_weight = 0.01;
  double penalty_weight = 0.1;
  int seed_count = 40;
  std::array<int, 3> split_days{180, 60, 125};
  std::array<int, 3> segment_days{15, 5, 10};

  static TrainConfig paper() { return {}; }
  /// Reduced layer sizes that performed slightly better in tuning.
  static TrainConfig tuned() {
    TrainConfig c;
    c.net_sizes = {250, 500};
    return c;
  }
  static TrainConfig preset(const std::string& name) {
    if (name == "paper") return paper();
    if (name == "tuned") return tuned();
    throw std::invalid_argument("unknown preset '" + name + "'");
  }

  void validate() const {
    if (episodes <= 0 || episode_len_h <= 0 || batch <= 0 || buffer <= 0 || seed_count <= 0)
      throw std::invalid_argument("train config counts must be positive");
    if (batch > buffer) throw std::invalid_argument("batch must not exceed buffer size");
    if (!(lr_actor > 0 && lr_critic > 0 && noise_scale >= 0))
      throw std::invalid_argument("learning rates must be positive");
    if (!(discount > 0 && discount < 1)) throw std::invalid_argument("discount must lie in (0, 1)");
    if (!(soft_update > 0 && soft_update < 1))
      throw std::invalid_argument("soft update rate must lie in (0, 1)");
    if (net_sizes[0] <= 0 || net_sizes[1] <= 0)
      throw std::invalid_argument("network sizes must be positive");
    if (discomfort_weight < 0 || penalty_weight < 0)
      throw std::invalid_argument("reward weights must be non-negative");
    for (int i = 0; i < 3; ++i)
      if (split_days[i] <= 0 || segment_days[i] <= 0)
        throw std::invalid_argument("split day counts must be positive");
  }
};

/// Reward shaping weights for the virtual (non-monetary) reward terms.
struct RewardWeights {
  double discomfort = 0.01;
  double penalty = 0.1;
  DiscomfortKind kind = DiscomfortKind::Quadratic;

  static RewardWeights from(const TrainConfig& c) {
    return {c.discomfort_weight, c.penalty_weight, c.discomfort_kind};
  }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Lists every violated invariant of a household; empty when valid.
inline std::vector<std::string> validate_household(const HouseholdSeries& series) {
  std::vector<std::string> report;
  const auto& steps = series.steps;
  try {
    series.spec.validate();
  } catch (const std::exception& e) {
    report.push_back(std::string("spec: ") + e.what());
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].pv_kwh >= 0.0))
      report.push_back("negative pv at " + format_timestamp(steps[i].timestamp));
    if (!(steps[i].demand_kwh >= 0.0))
      report.push_back("negative demand at " + format_timestamp(steps[i].timestamp));
    if (i > 0 && steps[i].timestamp - steps[i - 1].timestamp != hours{1})
      report.push_back("gap between " + format_timestamp(steps[i - 1].timestamp) + " and " +
                       format_timestamp(steps[i].timestamp));
  }
  if (steps.empty()) {
    if (!series.transactions.empty()) report.push_back("transactions without steps");
    return report;
  }
  const Timestamp origin = steps.front().timestamp;
  const Timestamp horizon = steps.back().timestamp + hours{1};
  std::vector<std::pair<HourSpan, std::size_t>> spans;
  for (std::size_t i = 0; i < series.transactions.size(); ++i) {
    const auto& tx = series.transactions[i];
    if (!(tx.end > tx.start)) report.push_back("transaction " + tx.id + " ends before it starts");
    if (!(tx.energy_kwh >= 0.0)) report.push_back("transaction " + tx.id + " has negative energy");
    if (tx.energy_kwh > series.spec.ev_capacity_kwh + 1e-9)
      report.push_back("transaction " + tx.id + " exceeds ev capacity");
    if (tx.start < origin || tx.end > horizon)
      report.push_back("transaction " + tx.id + " outside step range");
    spans.emplace_back(hour_span(tx, origin), i);
  }
  std::sort(spans.begin(), spans.end(),
            [](const auto& a, const auto& b) { return a.first.first < b.first.first; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first.first <= spans[i - 1].first.last)
      report.push_back("transactions " + series.transactions[spans[i - 1].second].id + " and " +
                       series.transactions[spans[i].second].id + " overlap");
  }
  return report;
}

}  // namespace hems
