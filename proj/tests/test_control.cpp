#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "hems/control.hpp"

using namespace hems;
using namespace hems::control;

namespace {

HouseholdSeries sunny_days(long days, unsigned seed = 1) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  auto h = fixture::make_household(days * 24, [&](long t) { return fixture::daylight_pv(t, 7) * (0.5 + 0.5 * u(rng)); },
                                   [&](long) { return 0.2 + u(rng); });
  for (long d = 0; d < days; ++d) h.transactions.push_back(fixture::make_tx(std::to_string(d), d * 24 + 8, 8, 15 * u(rng)));
  return h;
}

}  // namespace

TEST(Rbpm, RuleBranches) {
  TechnicalSpec spec;
  SimState s;
  s.soc_ev_kwh = spec.ev_capacity_kwh;
  s.pv_kwh = 4;
  s.demand_kwh = 1;
  auto a = rbpm_action(s, spec);
  EXPECT_EQ(a.target_bess, 1.0);
  EXPECT_EQ(a.target_ev, 1.0);
  s.pv_kwh = 0.5;
  a = rbpm_action(s, spec);
  EXPECT_EQ(a.target_bess, 0.0);
  EXPECT_EQ(a.target_ev, 1.0);
  // surplus fully taken by the connected EV leaves no BESS charge
  s.pv_kwh = 5;
  s.connected = true;
  s.countdown_h = 3;
  s.soc_ev_kwh = 10;
  EXPECT_EQ(rbpm_action(s, spec).target_bess, 0.0);
}

TEST(Rbpm, ChargesAtFullPowerOnArrival) {
  auto h = fixture::make_household(24, [](long) { return 0.0; }, [](long) { return 0.3; });
  h.spec.ev_capacity_kwh = 50;
  h.transactions.push_back(fixture::make_tx("m", 8, 5, 20));  // arrives at 60 %
  env::Timeline tl(h);
  auto r = rollout(tl, 0, 24, rbpm_policy(h.spec), Tariff::table(), {});
  EXPECT_DOUBLE_EQ(r.trace[8].outcome.flows.ev_charge_kwh, 11.0);
  EXPECT_DOUBLE_EQ(r.trace[9].outcome.flows.ev_charge_kwh, 9.0);
  EXPECT_EQ(r.trace[10].outcome.flows.ev_charge_kwh, 0.0);
  ASSERT_EQ(r.transaction_count(), 1u);
  EXPECT_DOUBLE_EQ(*r.discomfort_score, 0.0);
}

TEST(Rollout, EmptySegmentEarnsNothing) {
  auto h = fixture::make_household(48, [](long) { return 0.0; }, [](long) { return 0.0; });
  env::Timeline tl(h);
  auto r = rollout(tl, 0, 48, rbpm_policy(h.spec), Tariff::table(), {});
  EXPECT_EQ(r.profit_total, 0.0);
  EXPECT_FALSE(r.discomfort_score.has_value());
  EXPECT_DOUBLE_EQ(r.days, 2.0);
}

TEST(Rollout, ProfitPerDayMatchesFlows) {
  auto h = sunny_days(6);
  env::Timeline tl(h);
  Tariff tariff = Tariff::table();
  auto r = rollout(tl, 0, 144, rbpm_policy(h.spec), tariff, {});
  double sum = 0.0;
  for (const auto& row : r.trace) {
    const auto& f = row.outcome.flows;
    sum += tariff.price_sell * f.grid_feedin_kwh - tariff.price_buy * (f.grid_purchase_kwh + f.external_ev_kwh);
  }
  EXPECT_NEAR(r.profit_per_day, sum / 6.0, 1e-12);
  EXPECT_EQ(r.transaction_count(), 6u);
}

TEST(Rbpm, NeverChargesBatteryWithoutPv) {
  auto h = sunny_days(5);
  for (auto& s : h.steps) s.pv_kwh = 0.0;
  env::Timeline tl(h);
  auto r = rollout(tl, 0, 120, rbpm_policy(h.spec), Tariff::table(), {}, 3.0);
  for (const auto& row : r.trace) EXPECT_EQ(row.outcome.flows.bess_charge_kwh, 0.0);
}

TEST(Discomfort, Examples) {
  EXPECT_DOUBLE_EQ(*discomfort_score(std::vector<double>{1.0, 1.0}), 0.0);
  EXPECT_NEAR(*discomfort_score(std::vector<double>{0.99}), 1.0, 1e-12);
  EXPECT_NEAR(*discomfort_score(std::vector<double>{0.95, 1.0}), 2.5, 1e-12);
  EXPECT_FALSE(discomfort_score(std::vector<double>{}).has_value());
}

TEST(PotentialRealizedTest, Examples) {
  EXPECT_DOUBLE_EQ(potential_realized(-3.82, -4.17, -3.82).fraction, 1.0);
  EXPECT_DOUBLE_EQ(potential_realized(-4.50, -4.17, -3.82).fraction, 0.0);
  EXPECT_NEAR(potential_realized(-4.04, -4.17, -3.81).fraction, 0.13 / 0.36, 1e-9);
  auto zero = potential_realized(1.0, 1.0, 1.0);
  EXPECT_TRUE(zero.zero_potential);
  EXPECT_EQ(zero.fraction, 0.0);
  EXPECT_THROW(potential_realized(0, 1.0, 0.5), std::invalid_argument);
}

TEST(PotentialRealizedTest, ScaleInvariant) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-5, 5), scale(0.1, 10);
  for (int i = 0; i < 500; ++i) {
    double rb = u(rng), gap = std::abs(u(rng)) + 0.01, drl = rb + u(rng) * gap / 5;
    double k = scale(rng);
    EXPECT_NEAR(potential_realized(drl, rb, rb + gap).fraction,
                potential_realized(rb + k * (drl - rb), rb, rb + k * gap).fraction, 1e-12);
  }
}

TEST(RunRole, ChainsAdjacentSegmentsAndResetsOtherwise) {
  dataio::SplitPlan plan;
  plan.segments = {{dataio::Role::Train, 0, 24}, {dataio::Role::Train, 24, 48},
                   {dataio::Role::Eval, 48, 72}, {dataio::Role::Train, 72, 96}};
  std::vector<double> starts;
  auto total = run_role(plan, dataio::Role::Train, [&](const dataio::Segment& seg, double soc) {
    starts.push_back(soc);
    RolloutResult r;
    r.days = 1;
    r.final_soc_b_kwh = seg.end / 24.0;
    return r;
  });
  EXPECT_EQ(starts, (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_DOUBLE_EQ(total.days, 3.0);
}

TEST(Metrics, CsvLayout) {
  std::ostringstream out;
  write_metrics_header(out);
  write_metrics_row(out, {"h01", "ddpg", 3, "test", 0.2234567, 1.5, 0.5});
  write_metrics_row(out, {"h01", "rbpm", std::nullopt, "test", -4.17, std::nullopt, std::nullopt});
  EXPECT_EQ(out.str(),
            "household,policy,seed,split,profit_per_day,discomfort,potential_realized\n"
            "h01,ddpg,3,test,0.223457,1.500000,0.500000\n"
            "h01,rbpm,,test,-4.170000,,\n");
}
