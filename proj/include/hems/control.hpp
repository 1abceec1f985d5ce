#pragma once

// Rule-based power-mode controller, policy rollouts over split segments, and
// the evaluation metrics (profit per day, discomfort, potential realized).

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hems/dataio.hpp"
#include "hems/env.hpp"

namespace hems::control {

using Policy = std::function<Action(const SimState&)>;

/// EV charges at full power to 100 %; the battery charges to 100 % whenever PV
/// surplus remains after the EV and otherwise discharges toward 0 %.
inline Action rbpm_action(const SimState& s, const TechnicalSpec& spec) {
  const double planned_ev = env::ev_charge(1.0, s.soc_ev_kwh, spec.ev_capacity_kwh,
                                           spec.ev_charger_power_kw, s.connected);
  return {s.pv_kwh - s.demand_kwh - planned_ev > 0.0 ? 1.0 : 0.0, 1.0};
}

inline Policy rbpm_policy(const TechnicalSpec& spec) {
  return [spec](const SimState& s) { return rbpm_action(s, spec); };
}

struct RolloutResult {
  std::vector<env::TraceRow> trace;
  double profit_total = 0.0;
  double reward_total = 0.0;
  double days = 0.0;
  double profit_per_day = 0.0;
  std::vector<double> final_soc_fractions;  // one per completed transaction
  std::optional<double> discomfort_score;
  double final_soc_b_kwh = 0.0;

  std::size_t transaction_count() const { return final_soc_fractions.size(); }
};

/// Mean shortfall at disconnect in percentage points; absent without transactions.
inline std::optional<double> discomfort_score(const std::vector<double>& final_soc_fractions) {
  if (final_soc_fractions.empty()) return std::nullopt;
  double sum = 0.0;
  for (double f : final_soc_fractions) sum += 100.0 * (1.0 - f);
  return sum / static_cast<double>(final_soc_fractions.size());
}

inline std::optional<double> discomfort_score(const std::vector<env::TraceRow>& trace) {
  std::vector<double> finals;
  for (const auto& row : trace)
    if (row.outcome.final_soc_fraction) finals.push_back(*row.outcome.final_soc_fraction);
  return discomfort_score(finals);
}

namespace detail {

inline void finish(RolloutResult& r) {
  r.profit_per_day = r.days > 0 ? r.profit_total / r.days : 0.0;
  r.discomfort_score = discomfort_score(r.final_soc_fractions);
}

inline void append(RolloutResult& r, const env::TraceRow& row) {
  r.profit_total += row.outcome.profit;
  r.reward_total += row.outcome.reward;
  if (row.outcome.final_soc_fraction) r.final_soc_fractions.push_back(*row.outcome.final_soc_fraction);
  r.trace.push_back(row);
}

}  // namespace detail

/// Initial EV SoC for a segment starting at step t.
inline double initial_ev_soc(const env::Timeline& tl, long t) { return tl.interpolated_soc(t); }

/// Runs a policy over steps [start, end). The last step's successor uses the
/// exogenous data of step `end` when available, otherwise repeats the last step.
inline RolloutResult rollout(const env::Timeline& tl, long start, long end, const Policy& policy,
                             const Tariff& tariff, const RewardWeights& weights,
                             double initial_soc_b_kwh = 0.0) {
  if (start < 0 || end > static_cast<long>(tl.size()) || start >= end)
    throw std::out_of_range("rollout: invalid segment");
  const auto& spec = tl.spec();
  RolloutResult result;
  SimState s = env::build_state(tl, start, initial_soc_b_kwh, initial_ev_soc(tl, start));
  for (long t = start; t < end; ++t) {
    long nt = std::min<long>(t + 1, static_cast<long>(tl.size()) - 1);
    auto next = env::next_exogenous(tl, nt);
    if (nt == t) next.connected = false, next.countdown_h = -1;
    Action a = policy(s);
    env::TraceRow row{s.timestamp, s.pv_kwh, s.demand_kwh,
                      env::step(s, a, next, spec, tariff, weights)};
    detail::append(result, row);
    s = row.outcome.next_state;
  }
  result.final_soc_b_kwh = s.soc_b_kwh;
  result.days = static_cast<double>(end - start) / 24.0;
  detail::finish(result);
  return result;
}

/// Runs a segment-level solver/policy over every segment of a role. The battery
/// SoC carries over between directly adjacent segments and resets to empty
/// otherwise.
template <typename SegmentRunner>
RolloutResult run_role(const dataio::SplitPlan& plan, dataio::Role role, SegmentRunner&& run) {
  RolloutResult total;
  long previous_end = -1;
  double soc_b = 0.0;
  for (const auto& seg : plan.of_role(role)) {
    if (seg.start != previous_end) soc_b = 0.0;
    RolloutResult part = run(seg, soc_b);
    for (const auto& row : part.trace) detail::append(total, row);
    total.days += part.days;
    soc_b = part.final_soc_b_kwh;
    previous_end = seg.end;
  }
  total.final_soc_b_kwh = soc_b;
  detail::finish(total);
  return total;
}

inline RolloutResult rollout_role(const env::Timeline& tl, const dataio::SplitPlan& plan,
                                  dataio::Role role, const Policy& policy, const Tariff& tariff,
                                  const RewardWeights& weights) {
  return run_role(plan, role, [&](const dataio::Segment& seg, double soc_b) {
    return rollout(tl, seg.start, seg.end, policy, tariff, weights, soc_b);
  });
}

struct PotentialRealized {
  double fraction = 0.0;
  bool zero_potential = false;
};

/// Share of the benchmark gap (upper minus lower) closed by a policy, clamped to [0, 1].
inline PotentialRealized potential_realized(double policy_profit, double rbpm_profit,
                                            double mpc_profit, double eps = 1e-9) {
  const double gap = mpc_profit - rbpm_profit;
  if (gap < -1e-6) throw std::invalid_argument("potential_realized: upper benchmark below lower");
  if (gap <= eps) return {0.0, true};
  return {std::clamp((policy_profit - rbpm_profit) / gap, 0.0, 1.0), false};
}

struct MetricsRow {
  std::string household;
  std::string policy;
  std::optional<int> seed;
  std::string split;
  double profit_per_day = 0.0;
  std::optional<double> discomfort;
  std::optional<double> potential_realized;
};

inline void write_metrics_header(std::ostream& out) {
  out << "household,policy,seed,split,profit_per_day,discomfort,potential_realized\n";
}

inline void write_metrics_row(std::ostream& out, const MetricsRow& m) {
  char buf[64];
  out << m.household << ',' << m.policy << ',';
  if (m.seed) out << *m.seed;
  out << ',' << m.split << ',';
  std::snprintf(buf, sizeof buf, "%.6f", m.profit_per_day);
  out << buf << ',';
  if (m.discomfort) {
    std::snprintf(buf, sizeof buf, "%.6f", *m.discomfort);
    out << buf;
  }
  out << ',';
  if (m.potential_realized) {
    std::snprintf(buf, sizeof buf, "%.6f", *m.potential_realized);
    out << buf;
  }
  out << '\n';
}

}  // namespace hems::control
