#pragma once

// Full-information upper benchmark: one linear program per contiguous
// segment, with the same dynamics and grid-exchange objective as the
// simulator. Solutions are replayed through the environment.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hems/control.hpp"
#include "hems/env.hpp"
#include "hems/simplex.hpp"

namespace hems::mpc {

/// LP over steps [start, end) plus the variable index of every quantity.
struct LpModel {
  lp::Problem problem;
  long start = 0;
  long end = 0;
  double initial_soc_b_kwh = 0.0;
  // per step, relative to start; -1 where the variable does not exist
  std::vector<int> bess_charge, bess_discharge, purchase, feedin, soc_b;
  std::vector<int> ev_charge, soc_ev;
  std::vector<int> ev_slack;  // one per transaction ending inside the segment
  int terminal_constraints = 0;

  long steps() const { return end - start; }
};

inline LpModel build_lp(const env::Timeline& tl, long start, long end, const Tariff& tariff,
                        double initial_soc_b_kwh = 0.0) {
  const auto& spec = tl.spec();
  const auto& steps = tl.series().steps;
  const double keep = 1.0 - spec.bess_standing_loss_per_hour;
  LpModel m;
  m.start = start;
  m.end = end;
  m.initial_soc_b_kwh = initial_soc_b_kwh;
  const auto n = static_cast<std::size_t>(end - start);
  for (auto* v : {&m.bess_charge, &m.bess_discharge, &m.purchase, &m.feedin, &m.soc_b, &m.ev_charge,
                  &m.soc_ev})
    v->assign(n, -1);
  auto& p = m.problem;
  for (long t = start; t < end; ++t) {
    const auto k = static_cast<std::size_t>(t - start);
    m.bess_charge[k] = p.add_variable(0.0, 0.0, spec.bess_power_kw);
    m.bess_discharge[k] = p.add_variable(0.0, 0.0, spec.bess_power_kw);
    m.purchase[k] = p.add_variable(tariff.price_buy);
    m.feedin[k] = p.add_variable(-tariff.price_sell);
    m.soc_b[k] = p.add_variable(0.0, 0.0, spec.bess_capacity_kwh);
    if (tl.connected(t)) {
      m.ev_charge[k] = p.add_variable(0.0, 0.0, spec.ev_charger_power_kw);
      m.soc_ev[k] = p.add_variable(0.0, 0.0, spec.ev_capacity_kwh);
    }
  }
  for (long t = start; t < end; ++t) {
    const auto k = static_cast<std::size_t>(t - start);
    const auto& step = steps[static_cast<std::size_t>(t)];
    // pv + b_d + x_p = demand + d_ev + b_c + x_f
    std::vector<std::pair<int, double>> bal{
        {m.bess_discharge[k], 1.0}, {m.purchase[k], 1.0}, {m.bess_charge[k], -1.0}, {m.feedin[k], -1.0}};
    if (m.ev_charge[k] >= 0) bal.emplace_back(m.ev_charge[k], -1.0);
    p.add_row(std::move(bal), step.demand_kwh - step.pv_kwh);
    // soc_b(t+1) = keep * soc_b(t) + eta * b_c - b_d
    std::vector<std::pair<int, double>> dyn{{m.soc_b[k], 1.0},
                                            {m.bess_charge[k], -spec.bess_efficiency},
                                            {m.bess_discharge[k], 1.0}};
    double rhs = 0.0;
    if (k == 0) rhs = keep * initial_soc_b_kwh;
    else dyn.emplace_back(m.soc_b[k - 1], -keep);
    p.add_row(std::move(dyn), rhs);
    // soc_ev after charging = previous soc_ev + d_ev
    if (m.ev_charge[k] >= 0) {
      const auto& tx = tl.transactions()[*tl.transaction_at(t)];
      std::vector<std::pair<int, double>> ev{{m.soc_ev[k], 1.0}, {m.ev_charge[k], -1.0}};
      double ev_rhs = 0.0;
      if (t == tx.span.first) ev_rhs = tx.start_soc_kwh;
      else if (k == 0) ev_rhs = tl.interpolated_soc(t);
      else ev.emplace_back(m.soc_ev[k - 1], -1.0);
      p.add_row(std::move(ev), ev_rhs);
      if (t == tx.span.last) {
        int slack = p.add_variable(tariff.price_buy);
        m.ev_slack.push_back(slack);
        p.add_row({{m.soc_ev[k], 1.0}, {slack, 1.0}}, spec.ev_capacity_kwh);
        ++m.terminal_constraints;
      }
    }
  }
  return m;
}

struct Schedule {
  std::vector<env::FlowRequest> flows;
  std::vector<double> purchase, feedin, soc_b;
  double objective_profit = 0.0;  // negated LP minimum: grid-exchange profit incl. slack
  long iterations = 0;
  double residual = 0.0;
};

inline Schedule solve_lp(const LpModel& m, const lp::Options& opt = {}) {
  auto sol = lp::solve(m.problem, opt);
  if (sol.status != lp::Status::Optimal)
    throw lp::SolverError(sol.status == lp::Status::Infeasible ? "mpc: LP infeasible"
                                                               : "mpc: LP unbounded");
  Schedule s;
  s.iterations = sol.iterations;
  s.residual = sol.residual;
  s.objective_profit = -sol.objective;
  const auto n = static_cast<std::size_t>(m.steps());
  s.flows.resize(n);
  s.purchase.resize(n);
  s.feedin.resize(n);
  s.soc_b.resize(n);
  auto val = [&](int j) { return j >= 0 ? std::max(0.0, sol.x[static_cast<std::size_t>(j)]) : 0.0; };
  for (std::size_t k = 0; k < n; ++k) {
    s.flows[k] = {val(m.ev_charge[k]), val(m.bess_charge[k]), val(m.bess_discharge[k])};
    s.purchase[k] = val(m.purchase[k]);
    s.feedin[k] = val(m.feedin[k]);
    s.soc_b[k] = val(m.soc_b[k]);
  }
  return s;
}

/// Replays a schedule through the environment, producing the simulator's trace.
inline control::RolloutResult replay(const env::Timeline& tl, const LpModel& m, const Schedule& s,
                                     const Tariff& tariff, const RewardWeights& weights) {
  const auto& spec = tl.spec();
  control::RolloutResult result;
  SimState state = env::build_state(tl, m.start, m.initial_soc_b_kwh, tl.interpolated_soc(m.start));
  for (long t = m.start; t < m.end; ++t) {
    const auto k = static_cast<std::size_t>(t - m.start);
    env::FlowRequest req = s.flows[k];
    // Simultaneous charge and discharge can only be optimal when it costs
    // nothing (lossless storage, or surplus fed in at a zero price). Netting it
    // to the same stored-energy change leaves the profit unchanged.
    if (req.bess_charge_kwh > 0 && req.bess_discharge_kwh > 0) {
      const double stored = spec.bess_efficiency * req.bess_charge_kwh - req.bess_discharge_kwh;
      req.bess_charge_kwh = std::max(0.0, stored) / spec.bess_efficiency;
      req.bess_discharge_kwh = std::max(0.0, -stored);
    }
    long nt = std::min<long>(t + 1, static_cast<long>(tl.size()) - 1);
    auto next = env::next_exogenous(tl, nt);
    if (nt == t) next.connected = false, next.countdown_h = -1;
    Action a{std::clamp(s.soc_b[k] / spec.bess_capacity_kwh, 0.0, 1.0),
             state.connected
                 ? std::clamp((state.soc_ev_kwh + req.ev_charge_kwh) / spec.ev_capacity_kwh, 0.0, 1.0)
                 : 1.0};
    env::TraceRow row{state.timestamp, state.pv_kwh, state.demand_kwh,
                      env::apply_flows(state, req, a, next, spec, tariff, weights)};
    control::detail::append(result, row);
    state = row.outcome.next_state;
  }
  result.final_soc_b_kwh = state.soc_b_kwh;
  result.days = static_cast<double>(m.steps()) / 24.0;
  control::detail::finish(result);
  return result;
}

struct MpcResult {
  control::RolloutResult rollout;
  double lp_profit_total = 0.0;
  double max_replay_gap = 0.0;  // largest |LP objective - replayed profit| over segments
  long iterations = 0;
};

/// Solves and replays one segment.
inline MpcResult run_segment(const env::Timeline& tl, long start, long end, const Tariff& tariff,
                             const RewardWeights& weights, double initial_soc_b_kwh = 0.0,
                             const lp::Options& opt = {}) {
  auto model = build_lp(tl, start, end, tariff, initial_soc_b_kwh);
  auto schedule = solve_lp(model, opt);
  MpcResult r;
  r.rollout = replay(tl, model, schedule, tariff, weights);
  r.lp_profit_total = schedule.objective_profit;
  r.max_replay_gap = std::abs(schedule.objective_profit - r.rollout.profit_total);
  r.iterations = schedule.iterations;
  return r;
}

/// LP benchmark over all segments of a role with battery SoC chaining.
inline MpcResult mpc_role(const env::Timeline& tl, const dataio::SplitPlan& plan, dataio::Role role,
                          const Tariff& tariff, const RewardWeights& weights,
                          const lp::Options& opt = {}) {
  MpcResult total;
  total.rollout = control::run_role(plan, role, [&](const dataio::Segment& seg, double soc_b) {
    auto part = run_segment(tl, seg.start, seg.end, tariff, weights, soc_b, opt);
    total.lp_profit_total += part.lp_profit_total;
    total.max_replay_gap = std::max(total.max_replay_gap, part.max_replay_gap);
    total.iterations += part.iterations;
    return part.rollout;
  });
  return total;
}

inline double mpc_profit(const env::Timeline& tl, const dataio::SplitPlan& plan, dataio::Role role,
                         const Tariff& tariff) {
  return mpc_role(tl, plan, role, tariff, RewardWeights{}).rollout.profit_per_day;
}

}  // namespace hems::mpc
