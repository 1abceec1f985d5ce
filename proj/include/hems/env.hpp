#pragma once

// Deterministic household MDP: state construction, flow resolution in
// priority order (EV, then BESS, then grid), reward and SoC dynamics.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hems/dataio.hpp"
#include "hems/domain.hpp"

namespace hems::env {

// ---------------------------------------------------------------------------
// Flow equations
// ---------------------------------------------------------------------------

/// Energy drawn by the EV charger in one hour to approach the target SoC.
inline double ev_charge(double target_ev, double soc_ev_kwh, double ev_capacity_kwh,
                        double charger_power_kw, bool connected) {
  if (!connected) return 0.0;
  return std::max(0.0, std::min(charger_power_kw, target_ev * ev_capacity_kwh - soc_ev_kwh));
}

/// Energy drawn from residual PV into the battery. The request is inflated by
/// 1/efficiency so that the stored amount lands on the target.
inline double bess_charge(double residual_pv, double target_bess, double soc_b_kwh,
                          const TechnicalSpec& spec) {
  const double keep = 1.0 - spec.bess_standing_loss_per_hour;
  const double to_target =
      (target_bess * spec.bess_capacity_kwh - keep * soc_b_kwh) / spec.bess_efficiency;
  return std::max(0.0, std::min({residual_pv, spec.bess_power_kw, to_target}));
}

/// Energy released by the battery to cover residual demand. The SoC bound is
/// taken after standing loss so the stored energy never goes negative.
inline double bess_discharge(double residual_demand, double soc_b_kwh, const TechnicalSpec& spec) {
  const double available = (1.0 - spec.bess_standing_loss_per_hour) * soc_b_kwh;
  return std::max(0.0, std::min({residual_demand, spec.bess_power_kw, available}));
}

struct GridExchange {
  double purchase_kwh = 0.0;
  double feedin_kwh = 0.0;
};

/// Grid exchange closing the energy balance of one step.
inline GridExchange balance(double pv, double demand, double ev_charge_kwh, double bess_charge_kwh,
                            double bess_discharge_kwh) {
  if (bess_charge_kwh > 0.0 && bess_discharge_kwh > 0.0)
    throw std::logic_error("balance: simultaneous battery charge and discharge");
  const double net = demand + ev_charge_kwh + bess_charge_kwh - pv - bess_discharge_kwh;
  return {std::max(0.0, net), std::max(0.0, -net)};
}

/// Discomfort cost in EUR for a transaction ending at `soc_ev_fraction`,
/// measured in percentage points of shortfall.
inline double discomfort_cost(double soc_ev_fraction, const RewardWeights& w) {
  const double shortfall_pp = 100.0 * (1.0 - soc_ev_fraction);
  return w.kind == DiscomfortKind::Quadratic ? w.discomfort * shortfall_pp * shortfall_pp
                                             : w.discomfort * shortfall_pp;
}

/// Grid-exchange profit of a step (feed-in revenue minus purchase and external cost).
inline double profit(const EnergyFlows& f, const Tariff& tariff) {
  return tariff.price_sell * f.grid_feedin_kwh -
         tariff.price_buy * (f.grid_purchase_kwh + f.external_ev_kwh);
}

inline double reward(const EnergyFlows& flows, double soc_ev_fraction, bool disconnect_now,
                     const Action& action, bool connected, const Tariff& tariff,
                     const RewardWeights& weights) {
  double r = profit(flows, tariff);
  if (disconnect_now) r -= discomfort_cost(soc_ev_fraction, weights);
  if (!connected) r -= weights.penalty * (1.0 - action.target_ev);
  return r;
}

// ---------------------------------------------------------------------------
// Timeline: per-step connection data for a household
// ---------------------------------------------------------------------------

/// Precomputed exogenous data for every step of a household series.
class Timeline {
 public:
  struct Tx {
    HourSpan span;
    double start_soc_kwh = 0.0;
    std::size_t index = 0;  // into HouseholdSeries::transactions
  };

  explicit Timeline(const HouseholdSeries& series)
      : series_(&series), tx_at_(series.size(), -1) {
    const double cap = series.spec.ev_capacity_kwh;
    for (std::size_t i = 0; i < series.transactions.size(); ++i) {
      const auto& tx = series.transactions[i];
      Tx entry{hour_span(tx, series.origin()), dataio::start_soc(tx, cap), i};
      for (long t = std::max(0L, entry.span.first);
           t <= entry.span.last && t < static_cast<long>(series.size()); ++t) {
        if (tx_at_[static_cast<std::size_t>(t)] >= 0)
          throw DataError("timeline: overlapping transactions " + tx.id);
        tx_at_[static_cast<std::size_t>(t)] = static_cast<long>(txs_.size());
      }
      txs_.push_back(entry);
    }
    interpolated_ = dataio::interpolate_ev_soc(series);
  }

  const HouseholdSeries& series() const { return *series_; }
  const TechnicalSpec& spec() const { return series_->spec; }
  std::size_t size() const { return series_->size(); }
  const std::vector<Tx>& transactions() const { return txs_; }

  /// Index into transactions() of the transaction connected at step t.
  std::optional<std::size_t> transaction_at(long t) const {
    if (t < 0 || t >= static_cast<long>(size())) return std::nullopt;
    long i = tx_at_[static_cast<std::size_t>(t)];
    if (i < 0) return std::nullopt;
    return static_cast<std::size_t>(i);
  }

  bool connected(long t) const { return transaction_at(t).has_value(); }

  int countdown(long t) const {
    auto i = transaction_at(t);
    return i ? static_cast<int>(txs_[*i].span.last - t) : -1;
  }

  /// Interpolated EV SoC at the start of step t (full capacity outside transactions).
  double interpolated_soc(long t) const { return interpolated_[static_cast<std::size_t>(t)]; }

 private:
  const HouseholdSeries* series_;
  std::vector<long> tx_at_;
  std::vector<Tx> txs_;
  std::vector<double> interpolated_;
};

/// Builds the state at step t. When disconnected the EV SoC is held at capacity,
/// so the fractional feature reads 1 and the countdown reads -1.
inline SimState build_state(const Timeline& tl, long t, double soc_b_kwh, double soc_ev_kwh) {
  const auto& step = tl.series().steps.at(static_cast<std::size_t>(t));
  SimState s;
  s.timestamp = step.timestamp;
  s.soc_b_kwh = soc_b_kwh;
  s.connected = tl.connected(t);
  s.countdown_h = tl.countdown(t);
  s.soc_ev_kwh = s.connected ? soc_ev_kwh : tl.spec().ev_capacity_kwh;
  auto [c, sn] = hour_encoding(hour_of_day(step.timestamp));
  s.hour_cos = c;
  s.hour_sin = sn;
  s.season = season_of(step.timestamp);
  s.demand_kwh = step.demand_kwh;
  s.pv_kwh = step.pv_kwh;
  return s;
}

/// Exogenous information about the step following a transition.
struct NextExogenous {
  Timestamp timestamp{};
  double pv_kwh = 0.0;
  double demand_kwh = 0.0;
  bool connected = false;
  int countdown_h = -1;
  double arrival_soc_kwh = 0.0;  // EV SoC if the EV (re)appears at this step
};

inline NextExogenous next_exogenous(const Timeline& tl, long t) {
  const auto& step = tl.series().steps.at(static_cast<std::size_t>(t));
  NextExogenous n;
  n.timestamp = step.timestamp;
  n.pv_kwh = step.pv_kwh;
  n.demand_kwh = step.demand_kwh;
  n.connected = tl.connected(t);
  n.countdown_h = tl.countdown(t);
  if (auto i = tl.transaction_at(t)) n.arrival_soc_kwh = tl.transactions()[*i].start_soc_kwh;
  return n;
}

// ---------------------------------------------------------------------------
// Transition
// ---------------------------------------------------------------------------

struct StepOutcome {
  SimState next_state;
  EnergyFlows flows;
  double reward = 0.0;
  double profit = 0.0;  // grid exchange only
  bool disconnect_now = false;
  std::optional<double> final_soc_fraction;  // pre-top-up SoC at disconnect
  double soc_b_end_kwh = 0.0;
  double soc_ev_end_kwh = 0.0;  // after charging and any external top-up
};

/// Energy requests for one step before grid balancing.
struct FlowRequest {
  double ev_charge_kwh = 0.0;
  double bess_charge_kwh = 0.0;
  double bess_discharge_kwh = 0.0;
};

/// Resolves the controllable flows for an action in priority order.
inline FlowRequest resolve_flows(const SimState& s, const Action& a, const TechnicalSpec& spec) {
  FlowRequest req;
  req.ev_charge_kwh = ev_charge(a.target_ev, s.soc_ev_kwh, spec.ev_capacity_kwh,
                                spec.ev_charger_power_kw, s.connected);
  const double residual = s.pv_kwh - s.demand_kwh - req.ev_charge_kwh;
  if (residual > 0.0)
    req.bess_charge_kwh = bess_charge(residual, a.target_bess, s.soc_b_kwh, spec);
  else
    req.bess_discharge_kwh = bess_discharge(-residual, s.soc_b_kwh, spec);
  return req;
}

/// Applies explicit flows to a state: grid balance, SoC update, external
/// top-up at disconnect, reward, and the next state.
inline StepOutcome apply_flows(const SimState& s, const FlowRequest& req, const Action& action,
                               const NextExogenous& next, const TechnicalSpec& spec,
                               const Tariff& tariff, const RewardWeights& weights) {
  constexpr double tol = 1e-9;
  StepOutcome out;
  auto& f = out.flows;
  f.ev_charge_kwh = s.connected ? std::max(0.0, req.ev_charge_kwh) : 0.0;
  f.bess_charge_kwh = std::max(0.0, req.bess_charge_kwh);
  f.bess_discharge_kwh = std::max(0.0, req.bess_discharge_kwh);
  auto grid = balance(s.pv_kwh, s.demand_kwh, f.ev_charge_kwh, f.bess_charge_kwh,
                      f.bess_discharge_kwh);
  f.grid_purchase_kwh = grid.purchase_kwh;
  f.grid_feedin_kwh = grid.feedin_kwh;
  f.grid_purchase_ev_kwh = std::min(f.ev_charge_kwh, f.grid_purchase_kwh);

  double soc_b = (1.0 - spec.bess_standing_loss_per_hour) * s.soc_b_kwh +
                 spec.bess_efficiency * f.bess_charge_kwh - f.bess_discharge_kwh;
  if (soc_b < -tol || soc_b > spec.bess_capacity_kwh + tol)
    throw std::logic_error("apply_flows: battery SoC out of bounds");
  soc_b = std::clamp(soc_b, 0.0, spec.bess_capacity_kwh);

  double soc_ev = s.soc_ev_kwh;
  if (s.connected) {
    soc_ev += f.ev_charge_kwh;
    if (soc_ev > spec.ev_capacity_kwh + tol)
      throw std::logic_error("apply_flows: EV SoC above capacity");
    soc_ev = std::min(soc_ev, spec.ev_capacity_kwh);
  }
  out.disconnect_now = s.disconnects_now();
  double fraction = s.connected ? soc_ev / spec.ev_capacity_kwh : 1.0;
  if (out.disconnect_now) {
    out.final_soc_fraction = fraction;
    f.external_ev_kwh = spec.ev_capacity_kwh - soc_ev;
    soc_ev = spec.ev_capacity_kwh;
  }
  out.profit = profit(f, tariff);
  out.reward = reward(f, fraction, out.disconnect_now, action, s.connected, tariff, weights);
  out.soc_b_end_kwh = soc_b;
  out.soc_ev_end_kwh = s.connected ? soc_ev : spec.ev_capacity_kwh;

  SimState& n = out.next_state;
  n.timestamp = next.timestamp;
  n.soc_b_kwh = soc_b;
  n.connected = next.connected;
  n.countdown_h = next.countdown_h;
  bool continuing = s.connected && !out.disconnect_now && next.connected;
  if (!next.connected)
    n.soc_ev_kwh = spec.ev_capacity_kwh;
  else
    n.soc_ev_kwh = continuing ? soc_ev : next.arrival_soc_kwh;
  auto [c, sn] = hour_encoding(hour_of_day(next.timestamp));
  n.hour_cos = c;
  n.hour_sin = sn;
  n.season = season_of(next.timestamp);
  n.demand_kwh = next.demand_kwh;
  n.pv_kwh = next.pv_kwh;
  return out;
}

inline StepOutcome step(const SimState& s, const Action& a, const NextExogenous& next,
                        const TechnicalSpec& spec, const Tariff& tariff,
                        const RewardWeights& weights) {
  Action clamped{std::clamp(a.target_bess, 0.0, 1.0), std::clamp(a.target_ev, 0.0, 1.0)};
  return apply_flows(s, resolve_flows(s, clamped, spec), clamped, next, spec, tariff, weights);
}

// ---------------------------------------------------------------------------
// Trace output
// ---------------------------------------------------------------------------

struct TraceRow {
  Timestamp timestamp{};
  double pv = 0.0;
  double demand = 0.0;
  StepOutcome outcome;
};

inline void write_trace_header(std::ostream& out) {
  out << "t,pv,demand,d_ev,b_c,b_d,purchase,feedin,soc_b,soc_ev,reward\n";
}

inline void write_trace_row(std::ostream& out, const TraceRow& row) {
  const auto& f = row.outcome.flows;
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", row.pv,
                row.demand, f.ev_charge_kwh, f.bess_charge_kwh, f.bess_discharge_kwh,
                f.grid_purchase_kwh, f.grid_feedin_kwh, row.outcome.soc_b_end_kwh,
                row.outcome.soc_ev_end_kwh, row.outcome.reward);
  out << format_timestamp(row.timestamp) << buf;
}

}  // namespace hems::env
