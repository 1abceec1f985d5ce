#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "hems/env.hpp"

using namespace hems;
using namespace hems::env;

namespace {

TechnicalSpec household01() {
  TechnicalSpec s;
  s.bess_capacity_kwh = 6.75;
  s.bess_power_kw = 3.3;
  s.ev_capacity_kwh = 48.25;
  s.ev_charger_power_kw = 11.0;
  return s;
}

SimState idle_state(double soc_b) {
  SimState s;
  s.soc_b_kwh = soc_b;
  s.soc_ev_kwh = 40.0;
  s.timestamp = fixture::at_hour(0);
  return s;
}

NextExogenous idle_next() {
  NextExogenous n;
  n.timestamp = fixture::at_hour(1);
  return n;
}

}  // namespace

TEST(EvCharge, DisconnectedDrawsNothing) {
  EXPECT_EQ(ev_charge(1.0, 10.0, 48.25, 11.0, false), 0.0);
}

TEST(EvCharge, ChargerLimited) {
  EXPECT_DOUBLE_EQ(ev_charge(1.0, 30.0, 48.25, 11.0, true), 11.0);
}

TEST(EvCharge, TargetBelowSocClampsToZero) {
  EXPECT_EQ(ev_charge(0.5, 30.0, 48.25, 11.0, true), 0.0);
}

TEST(BessCharge, Branches) {
  TechnicalSpec spec = household01();
  EXPECT_DOUBLE_EQ(bess_charge(2.0, 1.0, 0.0, spec), 2.0);
  EXPECT_DOUBLE_EQ(bess_charge(5.0, 1.0, 0.0, spec), 3.3);
  spec.bess_standing_loss_per_hour = 0.0;
  EXPECT_DOUBLE_EQ(bess_charge(5.0, 0.5, 3.375, spec), 0.0);
}

TEST(BessCharge, StoredAmountReachesTarget) {
  TechnicalSpec spec = household01();
  double soc = 5.0;
  double drawn = bess_charge(10.0, 0.9, soc, spec);
  double stored = (1 - spec.bess_standing_loss_per_hour) * soc + spec.bess_efficiency * drawn;
  EXPECT_NEAR(stored, 0.9 * spec.bess_capacity_kwh, 1e-12);
}

TEST(BessDischarge, Branches) {
  TechnicalSpec spec = household01();
  EXPECT_DOUBLE_EQ(bess_discharge(8.27, 6.0, spec), 3.3);
  EXPECT_EQ(bess_discharge(5.0, 0.0, spec), 0.0);
  EXPECT_DOUBLE_EQ(bess_discharge(1.0, 5.0, spec), 1.0);
}

TEST(Balance, Cases) {
  auto surplus = balance(10, 2, 0, 3, 0);
  EXPECT_DOUBLE_EQ(surplus.feedin_kwh, 5.0);
  EXPECT_EQ(surplus.purchase_kwh, 0.0);
  auto deficit = balance(0, 2, 11, 0, 3.3);
  EXPECT_NEAR(deficit.purchase_kwh, 9.7, 1e-12);
  EXPECT_EQ(deficit.feedin_kwh, 0.0);
  auto zero = balance(0, 0, 0, 0, 0);
  EXPECT_EQ(zero.purchase_kwh, 0.0);
  EXPECT_EQ(zero.feedin_kwh, 0.0);
  EXPECT_THROW(balance(1, 1, 0, 1, 1), std::logic_error);
}

TEST(Reward, Examples) {
  Tariff tariff = Tariff::table();
  RewardWeights w{0.01, 0.1};
  EnergyFlows none;
  EXPECT_EQ(reward(none, 1.0, false, {0, 1}, true, tariff, w), 0.0);
  EXPECT_NEAR(reward(none, 0.9, true, {0, 1}, true, tariff, w), -1.0, 1e-12);
  EnergyFlows feed;
  feed.grid_feedin_kwh = 10.0;
  EXPECT_NEAR(reward(feed, 1.0, false, {0, 1}, true, tariff, w), 0.80, 1e-12);
}

TEST(Step, DisconnectedPenalty) {
  TechnicalSpec spec = household01();
  Tariff tariff = Tariff::table();
  RewardWeights w{0.01, 0.1};
  auto full = step(idle_state(0.0), {0, 1}, idle_next(), spec, tariff, w);
  EXPECT_EQ(full.reward, 0.0);
  EXPECT_EQ(full.flows.grid_purchase_kwh, 0.0);
  auto none = step(idle_state(0.0), {0, 0}, idle_next(), spec, tariff, w);
  EXPECT_NEAR(none.reward, -0.1, 1e-12);
}

TEST(Step, PvChargesBatteryThenFeedsIn) {
  TechnicalSpec spec = household01();
  SimState s = idle_state(0.0);
  s.pv_kwh = 5.0;
  s.demand_kwh = 1.0;
  auto out = step(s, {1, 1}, idle_next(), spec, Tariff::table(), {});
  EXPECT_DOUBLE_EQ(out.flows.bess_charge_kwh, 3.3);
  EXPECT_NEAR(out.flows.grid_feedin_kwh, 0.7, 1e-12);
  EXPECT_EQ(out.flows.grid_purchase_kwh, 0.0);
}

TEST(Step, StandingLossOverIdleHour) {
  TechnicalSpec spec = household01();
  auto out = step(idle_state(6.75), {1, 1}, idle_next(), spec, Tariff::table(), {});
  EXPECT_NEAR(out.next_state.soc_b_kwh, 6.749798, 1e-6);
  EXPECT_DOUBLE_EQ(out.next_state.soc_b_kwh, (1 - 0.00003) * 6.75);
}

TEST(Step, DisconnectBuysShortfallExternally) {
  TechnicalSpec spec = household01();
  SimState s = idle_state(0.0);
  s.connected = true;
  s.countdown_h = 0;
  s.soc_ev_kwh = 30.0;
  Tariff tariff = Tariff::table();
  auto out = step(s, {0, 30.0 / 48.25}, idle_next(), spec, tariff, {0.01, 0.1});
  EXPECT_NEAR(out.flows.external_ev_kwh, 18.25, 1e-12);
  ASSERT_TRUE(out.final_soc_fraction.has_value());
  EXPECT_NEAR(*out.final_soc_fraction, 30.0 / 48.25, 1e-12);
  EXPECT_DOUBLE_EQ(out.soc_ev_end_kwh, 48.25);
  double shortfall = 100.0 * (1.0 - 30.0 / 48.25);
  EXPECT_NEAR(out.reward, -0.40 * 18.25 - 0.01 * shortfall * shortfall, 1e-9);
}

TEST(BuildState, HourEncodingAndDisconnected) {
  auto h = fixture::make_household(48, [](long) { return 0.0; }, [](long) { return 0.5; });
  h.transactions.push_back(fixture::make_tx("a", 8, 4, 10.0));
  Timeline tl(h);
  auto s0 = build_state(tl, 0, 0.0, 0.0);
  EXPECT_NEAR(s0.hour_cos, 1.0, 1e-15);
  EXPECT_NEAR(s0.hour_sin, 0.0, 1e-15);
  EXPECT_EQ(s0.countdown_h, -1);
  EXPECT_DOUBLE_EQ(s0.features(h.spec)[1], 1.0);
  auto s6 = build_state(tl, 6, 0.0, 0.0);
  EXPECT_NEAR(s6.hour_cos, 0.0, 1e-15);
  EXPECT_NEAR(s6.hour_sin, 1.0, 1e-15);
  auto s9 = build_state(tl, 9, 0.0, 32.0);
  EXPECT_TRUE(s9.connected);
  EXPECT_EQ(s9.countdown_h, 2);
  EXPECT_DOUBLE_EQ(s9.features(h.spec)[1], 32.0 / 40.0);
  EXPECT_TRUE(build_state(tl, 11, 0, 0).disconnects_now());
}

TEST(BuildState, DisconnectedInvariantEveryHour) {
  auto h = fixture::make_household(24 * 10, [](long t) { return fixture::daylight_pv(t, 6); },
                                   [](long) { return 0.4; });
  h.transactions.push_back(fixture::make_tx("a", 30, 10, 12.0));
  h.transactions.push_back(fixture::make_tx("b", 100, 40, 20.0));
  Timeline tl(h);
  for (long t = 0; t < static_cast<long>(tl.size()); ++t) {
    auto s = build_state(tl, t, 1.0, 5.0);
    EXPECT_EQ(s.countdown_h >= 0, s.connected);
    if (!s.connected) {
      EXPECT_EQ(s.countdown_h, -1);
      EXPECT_EQ(s.features(h.spec)[1], 1.0);
    }
    EXPECT_NEAR(s.hour_cos * s.hour_cos + s.hour_sin * s.hour_sin, 1.0, 1e-9);
  }
}

TEST(HourEncoding, RoundTripsAllHours) {
  for (int h = 0; h < 24; ++h) {
    auto [c, s] = hour_encoding(h);
    EXPECT_EQ(hour_from_encoding(c, s), h);
  }
}

TEST(Season, Meteorological) {
  EXPECT_EQ(season_of(parse_timestamp("2021-12-15T00:00:00")), 0);
  EXPECT_EQ(season_of(parse_timestamp("2021-02-15T00:00:00")), 0);
  EXPECT_EQ(season_of(parse_timestamp("2021-03-01T00:00:00")), 1);
  EXPECT_EQ(season_of(parse_timestamp("2021-07-01T00:00:00")), 2);
  EXPECT_EQ(season_of(parse_timestamp("2021-11-30T23:00:00")), 3);
}

// Random actions over random exogenous data: balance, exclusivity, bounds, determinism.
TEST(StepProperty, PhysicsInvariantsUnderRandomActions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const long hours_total = 24 * 20;
  auto h = fixture::make_household(
      hours_total, [&](long t) { return fixture::daylight_pv(t, 9.0) * u(rng); },
      [&](long) { return 3.0 * u(rng); });
  for (long d = 0; d < 20; d += 2) h.transactions.push_back(fixture::make_tx(std::to_string(d), d * 24 + 7, 9, 25.0 * u(rng)));
  Timeline tl(h);
  const auto& spec = h.spec;
  SimState s = build_state(tl, 0, 3.0, tl.interpolated_soc(0));
  for (long t = 0; t + 1 < hours_total; ++t) {
    Action a{u(rng), u(rng)};
    auto next = next_exogenous(tl, t + 1);
    auto out = step(s, a, next, spec, Tariff::table(), {});
    auto again = step(s, a, next, spec, Tariff::table(), {});
    EXPECT_EQ(std::memcmp(&out.flows, &again.flows, sizeof out.flows), 0);
    EXPECT_EQ(out.reward, again.reward);
    const auto& f = out.flows;
    double residual = s.pv_kwh + f.bess_discharge_kwh + f.grid_purchase_kwh - s.demand_kwh -
                      f.ev_charge_kwh - f.bess_charge_kwh - f.grid_feedin_kwh;
    EXPECT_LE(std::abs(residual), 1e-9);
    EXPECT_EQ(f.grid_purchase_kwh * f.grid_feedin_kwh, 0.0);
    EXPECT_EQ(f.bess_charge_kwh * f.bess_discharge_kwh, 0.0);
    EXPECT_GE(out.soc_b_end_kwh, 0.0);
    EXPECT_LE(out.soc_b_end_kwh, spec.bess_capacity_kwh);
    EXPECT_GE(out.soc_ev_end_kwh, 0.0);
    EXPECT_LE(out.soc_ev_end_kwh, spec.ev_capacity_kwh);
    if (out.disconnect_now) EXPECT_EQ(out.soc_ev_end_kwh, spec.ev_capacity_kwh);
    s = out.next_state;
  }
}
