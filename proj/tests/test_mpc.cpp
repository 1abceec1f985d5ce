#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "hems/mpc.hpp"

using namespace hems;

namespace {

HouseholdSeries random_days(long days, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  auto h = fixture::make_household(
      days * 24, [&](long t) { return fixture::daylight_pv(t, 9) * u(rng); }, [&](long) { return 0.1 + 1.5 * u(rng); });
  long t = 5;
  while (t < days * 24 - 2) {
    long len = 2 + static_cast<long>(14 * u(rng));
    len = std::min(len, days * 24 - t);
    h.transactions.push_back(fixture::make_tx(std::to_string(t), t, len, 25 * u(rng)));
    t += len + 4 + static_cast<long>(20 * u(rng));
  }
  return h;
}

}  // namespace

TEST(BuildLp, StructuralCountOneTransaction) {
  auto h = fixture::make_household(24, [](long) { return 0.0; }, [](long) { return 0.5; });
  h.transactions.push_back(fixture::make_tx("a", 8, 6, 10));
  env::Timeline tl(h);
  auto m = mpc::build_lp(tl, 0, 24, Tariff::table());
  // five quantities every step, two more per connected step, one slack
  EXPECT_EQ(m.problem.variables(), 24 * 5 + 6 * 2 + 1);
  EXPECT_EQ(m.terminal_constraints, 1);
  EXPECT_EQ(m.ev_slack.size(), 1u);
}

TEST(BuildLp, NoTransactionsHasNoEvVariables) {
  auto h = fixture::make_household(24, [](long) { return 1.0; }, [](long) { return 0.5; });
  env::Timeline tl(h);
  auto m = mpc::build_lp(tl, 0, 24, Tariff::table());
  EXPECT_TRUE(m.ev_slack.empty());
  for (long k = 0; k < 24; ++k) EXPECT_EQ(m.ev_charge[k], -1);
  auto s = mpc::solve_lp(m);
  for (const auto& f : s.flows) EXPECT_EQ(f.ev_charge_kwh, 0.0);
}

TEST(SolveLp, NoPvNeverChargesBattery) {
  auto h = fixture::make_household(72, [](long) { return 0.0; }, [](long t) { return 0.2 + (t % 5) * 0.3; });
  env::Timeline tl(h);
  auto r = mpc::run_segment(tl, 0, 72, Tariff::table(), {});
  for (const auto& row : r.rollout.trace) EXPECT_EQ(row.outcome.flows.bess_charge_kwh, 0.0);
}

TEST(SolveLp, SunnyDayAvoidsAllPurchases) {
  // arrival at 08:00 with a modest need and ample PV: the optimum buys nothing
  auto h = fixture::make_household(24, [](long t) { return fixture::daylight_pv(t, 8); },
                                   [](long t) { return t % 24 >= 7 && t % 24 <= 17 ? 0.4 : 0.0; });
  h.transactions.push_back(fixture::make_tx("day", 8, 8, 12));
  env::Timeline tl(h);
  auto r = mpc::run_segment(tl, 0, 24, Tariff::table(), {});
  double bought = 0;
  for (const auto& row : r.rollout.trace) bought += row.outcome.flows.grid_purchase_kwh + row.outcome.flows.external_ev_kwh;
  EXPECT_NEAR(bought, 0.0, 1e-9);
}

// Upper bound, replay consistency and complementary grid flows on random data.
TEST(MpcProperty, BoundsRbpmAndReplaysExactly) {
  const Tariff tariff = Tariff::table();
  for (unsigned seed = 1; seed <= 12; ++seed) {
    auto h = random_days(5, seed);
    env::Timeline tl(h);
    auto r = mpc::run_segment(tl, 0, 120, tariff, {});
    auto rb = control::rollout(tl, 0, 120, control::rbpm_policy(h.spec), tariff, {});
    EXPECT_GE(r.lp_profit_total, rb.profit_total - 1e-9) << "seed " << seed;
    EXPECT_LE(r.max_replay_gap, 1e-6) << "seed " << seed;
    for (const auto& row : r.rollout.trace) {
      EXPECT_EQ(row.outcome.flows.grid_purchase_kwh * row.outcome.flows.grid_feedin_kwh, 0.0);
      EXPECT_EQ(row.outcome.flows.bess_charge_kwh * row.outcome.flows.bess_discharge_kwh, 0.0);
    }
  }
}

TEST(MpcProperty, ChargesEveryEvFullyWhenFeasible) {
  auto h = random_days(4, 77);
  env::Timeline tl(h);
  auto r = mpc::run_segment(tl, 0, 96, Tariff::table(), {});
  for (const auto& row : r.rollout.trace)
    if (row.outcome.final_soc_fraction) EXPECT_NEAR(*row.outcome.final_soc_fraction, 1.0, 1e-7);
}

TEST(MpcRole, ChainsSegmentsAndTotalsDays) {
  auto h = random_days(12, 5);
  env::Timeline tl(h);
  dataio::SplitPlan plan;
  plan.segments = {{dataio::Role::Test, 0, 96}, {dataio::Role::Test, 96, 192}, {dataio::Role::Eval, 192, 288}};
  auto r = mpc::mpc_role(tl, plan, dataio::Role::Test, Tariff::table(), {});
  EXPECT_DOUBLE_EQ(r.rollout.days, 8.0);
  EXPECT_LE(r.max_replay_gap, 1e-6);
  auto rb = control::rollout_role(tl, plan, dataio::Role::Test, control::rbpm_policy(h.spec), Tariff::table(), {});
  EXPECT_GE(r.rollout.profit_per_day, rb.profit_per_day - 1e-9);
}

TEST(MpcProperty, LosslessStorageReplaysExactly) {
  // lossless storage makes simultaneous charge and discharge free, so the LP may pick it
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> tenth(0, 15);
  TechnicalSpec spec;
  spec.bess_capacity_kwh = 1.0;
  spec.bess_power_kw = 0.4;
  spec.bess_efficiency = 1.0;
  spec.bess_standing_loss_per_hour = 0.0;
  spec.ev_capacity_kwh = 1.5;
  spec.ev_charger_power_kw = 0.6;
  for (int trial = 0; trial < 40; ++trial) {
    auto h = fixture::make_household(
        16, [&](long) { return tenth(rng) / 10.0; }, [&](long) { return tenth(rng) / 20.0; }, spec);
    h.transactions = {fixture::make_tx("a", 2, 5, 0.9), fixture::make_tx("b", 9, 4, 0.5)};
    env::Timeline tl(h);
    auto r = mpc::run_segment(tl, 0, 16, Tariff::table(), {}, 0.5);
    EXPECT_LE(r.max_replay_gap, 1e-9) << "trial " << trial;
  }
}
