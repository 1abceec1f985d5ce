#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "hems/dataio.hpp"

using namespace hems;
using namespace hems::dataio;

namespace {

const char* kHeader = "timestamp,household_id,pv_w,load_w,ev_w,transaction_id\n";

std::vector<RawMeasurement> raw_hour(const std::string& hh, Timestamp hour, std::array<double, 4> pv,
                                     double load = 500, double ev = 0) {
  std::vector<RawMeasurement> out;
  for (int q = 0; q < 4; ++q)
    out.push_back({hour + std::chrono::minutes{15 * q}, hh, pv[q], load, ev, ""});
  return out;
}

HourlyChannels channel(std::vector<double> pv) {
  HourlyChannels c;
  c.household_id = "h";
  c.origin = fixture::day0();
  c.load_kwh = pv;
  c.ev_kwh.assign(pv.size(), 0.0);
  for (auto& v : c.ev_kwh) v = 0.0;
  c.pv_kwh = std::move(pv);
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::isnan(c.pv_kwh[i])) c.ev_kwh[i] = NAN;
  return c;
}

// Scans a plan against the contract: contiguous cover at midnights, exact day
// totals, and no transaction connected across any boundary.
void expect_valid_plan(const HouseholdSeries& h, const SplitPlan& plan) {
  ASSERT_FALSE(plan.segments.empty());
  EXPECT_EQ(plan.segments.front().start, 0);
  EXPECT_EQ(plan.segments.back().end, static_cast<long>(h.size()));
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const auto& s = plan.segments[i];
    EXPECT_EQ(s.start % 24, 0);
    EXPECT_EQ(s.end % 24, 0);
    EXPECT_LT(s.start, s.end);
    if (i > 0) {
      EXPECT_EQ(plan.segments[i - 1].end, s.start);
      EXPECT_NE(plan.segments[i - 1].role, s.role);
    }
    for (const auto& tx : h.transactions) {
      auto span = hour_span(tx, h.origin());
      EXPECT_FALSE(span.first < s.start && span.last >= s.start) << "tx " << tx.id << " straddles " << s.start;
    }
  }
  EXPECT_EQ(plan.days(Role::Train), 180);
  EXPECT_EQ(plan.days(Role::Eval), 60);
  EXPECT_EQ(plan.days(Role::Test), 125);
}

HouseholdSeries daytime_year() {
  auto h = fixture::make_household(8760, [](long t) { return fixture::daylight_pv(t, 6); },
                                   [](long) { return 0.5; });
  for (long d = 0; d < 365; d += 3) h.transactions.push_back(fixture::make_tx(std::to_string(d), d * 24 + 9, 6, 10));
  return h;
}

}  // namespace

TEST(Ingest, ParsesAndSortsRecords) {
  std::istringstream in(std::string(kHeader) +
                        "2021-03-01T00:45:00,h1,0,300,0,\n"
                        "2021-03-01T00:00:00,h1,0,300,0,\n"
                        "2021-03-01T00:30:00,h1,0,300,0,\n"
                        "2021-03-01T00:15:00,h1,10,300,0,\n");
  auto rows = ingest(in);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i - 1].timestamp, rows[i].timestamp);
  EXPECT_DOUBLE_EQ(rows[1].pv_power_w, 10.0);
}

TEST(Ingest, NegativePowerReportsLine) {
  std::istringstream in(std::string(kHeader) +
                        "2021-03-01T00:00:00,h1,0,300,0,\n"
                        "2021-03-01T00:15:00,h1,-5,300,0,\n");
  try {
    ingest(in);
    FAIL() << "expected rejection";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Ingest, RejectsUnknownColumnAndOffGrid) {
  std::istringstream unknown("timestamp,household_id,pv_w,load_w,ev_w,foo\n");
  EXPECT_THROW(ingest(unknown), DataError);
  std::istringstream off(std::string(kHeader) + "2021-03-01T00:07:00,h1,0,300,0,\n");
  EXPECT_THROW(ingest(off), DataError);
  std::istringstream malformed(std::string(kHeader) + "2021-03-01T00:00:00,h1,abc,300,0,\n");
  EXPECT_THROW(ingest(malformed), DataError);
}

TEST(Ingest, FullYearIsOneHouseholdYear) {
  std::ostringstream csv;
  csv << kHeader;
  Timestamp t0 = parse_timestamp("2021-01-01T00:00:00");
  for (long i = 0; i < 365 * 96; ++i)
    csv << format_timestamp(t0 + std::chrono::minutes{15 * i}) << ",h1," << (i % 7) * 100 << ",400,0,\n";
  std::istringstream in(csv.str());
  auto rows = ingest(in);
  EXPECT_EQ(rows.size(), 35040u);
  auto groups = by_household(rows);
  ASSERT_EQ(groups.size(), 1u);
  auto hourly = resample_hourly(groups.at("h1"));
  EXPECT_EQ(hourly.size(), 8760u);
  // energy conservation: hourly sum = sum of quarter-hour powers / 4
  double quarter_sum = 0.0, hourly_sum = 0.0;
  for (const auto& r : rows) quarter_sum += r.pv_power_w / 4.0 / 1000.0;
  for (double v : hourly.pv_kwh) hourly_sum += v;
  EXPECT_NEAR(hourly_sum, quarter_sum, 1e-9);
}

TEST(Resample, MeansOfQuarterSlots) {
  auto flat = resample_hourly(raw_hour("h", fixture::day0(), {2000, 2000, 2000, 2000}));
  EXPECT_DOUBLE_EQ(flat.pv_kwh[0], 2.0);
  auto step = resample_hourly(raw_hour("h", fixture::day0(), {0, 0, 4000, 4000}));
  EXPECT_DOUBLE_EQ(step.pv_kwh[0], 2.0);
}

TEST(Resample, PartialHourIsMissing) {
  auto raw = raw_hour("h", fixture::day0(), {1, 1, 1, 1});
  auto second = raw_hour("h", fixture::at_hour(1), {1, 1, 1, 1});
  second.pop_back();
  raw.insert(raw.end(), second.begin(), second.end());
  auto third = raw_hour("h", fixture::at_hour(2), {1, 1, 1, 1});
  raw.insert(raw.end(), third.begin(), third.end());
  auto h = resample_hourly(raw);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_TRUE(h.missing(1));
  auto filled = fill_gaps(h);
  EXPECT_NEAR(filled.pv_kwh[1], 0.001, 1e-15);
}

TEST(FillGaps, ConstantNeighbours) {
  auto c = fill_gaps(channel({3.0, NAN, 3.0}));
  EXPECT_DOUBLE_EQ(c.pv_kwh[1], 3.0);
}

TEST(FillGaps, LinearRampReproducedExactly) {
  auto c = fill_gaps(channel({1, 2, NAN, NAN, NAN, 6, 7}));
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(c.pv_kwh[i], i + 1.0, 1e-12);
}

TEST(FillGaps, ParabolaReproducedAndClamped) {
  // y = (x - 3)^2 - 1 is negative at x = 3 and must clamp to 0
  std::vector<double> v{8, 3, 0, NAN, 0, 3};
  auto c = fill_gaps(channel(v));
  EXPECT_DOUBLE_EQ(c.pv_kwh[3], 0.0);
  std::vector<double> w{9, 4, NAN, 0, 1};  // (x-3)^2
  EXPECT_NEAR(fill_gaps(channel(w)).pv_kwh[2], 1.0, 1e-12);
}

TEST(FillGaps, RejectsLongOrEdgeGaps) {
  EXPECT_THROW(fill_gaps(channel({1, NAN, NAN, NAN, NAN, NAN, NAN, 1})), DataError);
  EXPECT_NO_THROW(fill_gaps(channel({1, NAN, NAN, NAN, NAN, NAN, 1})));
  EXPECT_THROW(fill_gaps(channel({NAN, 1, 1})), DataError);
  EXPECT_THROW(fill_gaps(channel({1, 1, NAN})), DataError);
}

TEST(ToSteps, DemandExcludesEvLoad) {
  auto raw = raw_hour("h", fixture::day0(), {0, 0, 0, 0}, 5000, 3000);
  auto steps = to_steps(resample_hourly(raw));
  EXPECT_DOUBLE_EQ(steps[0].demand_kwh, 2.0);
}

TEST(Transactions, DerivedFromIdsOrRuns) {
  std::vector<RawMeasurement> raw;
  for (int q = 0; q < 8; ++q)
    raw.push_back({fixture::day0() + std::chrono::minutes{15 * q}, "h", 0, 0, q >= 2 && q < 6 ? 4000.0 : 0.0, ""});
  auto runs = derive_transactions(raw);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].start, fixture::day0() + std::chrono::minutes{30});
  EXPECT_EQ(runs[0].end, fixture::day0() + std::chrono::minutes{90});
  EXPECT_DOUBLE_EQ(runs[0].energy_kwh, 4.0);
  for (auto& m : raw) m.transaction_id = m.ev_load_w > 0 ? "T7" : "";
  auto by_id = derive_transactions(raw);
  ASSERT_EQ(by_id.size(), 1u);
  EXPECT_EQ(by_id[0].id, "T7");
  EXPECT_DOUBLE_EQ(by_id[0].energy_kwh, 4.0);
}

TEST(Capacity, InferEvCapacity) {
  std::vector<ChargingTransaction> txs{fixture::make_tx("a", 0, 1, 10.0)};
  EXPECT_DOUBLE_EQ(infer_ev_capacity(txs), 10.0);
  EXPECT_THROW(infer_ev_capacity({}), DataError);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 80);
  double previous = infer_ev_capacity(txs);
  for (int i = 0; i < 200; ++i) {
    txs.push_back(fixture::make_tx("x", i, 1, u(rng)));
    double now = infer_ev_capacity(txs);
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(Capacity, InferPvPeak) {
  auto zeros = raw_hour("h", fixture::day0(), {0, 0, 0, 0});
  EXPECT_EQ(infer_pv_peak(zeros), 0.0);
  auto some = raw_hour("h", fixture::day0(), {100, 9300, 200, 0});
  EXPECT_DOUBLE_EQ(infer_pv_peak(some), 9.3);
  EXPECT_THROW(infer_pv_peak({}), DataError);
}

TEST(StartSoc, Examples) {
  EXPECT_EQ(start_soc(21.94, 21.94), 0.0);
  EXPECT_EQ(start_soc(0.0, 40.0), 40.0);
  EXPECT_DOUBLE_EQ(start_soc_fraction(10.75, 43.0), 0.75);
  EXPECT_THROW(start_soc(50.0, 40.0), DataError);
}

TEST(EvSoc, InterpolationExamples) {
  auto p = soc_profile(20, 40, 4);
  ASSERT_EQ(p.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(p[k], 20 + 5 * k);
  auto one = soc_profile(10, 12, 1);
  EXPECT_EQ(one, (std::vector<double>{10, 12}));
  auto h = fixture::make_household(24, [](long) { return 0.0; }, [](long) { return 0.0; });
  h.transactions.push_back(fixture::make_tx("a", 5, 4, 20.0));
  auto soc = interpolate_ev_soc(h);
  EXPECT_DOUBLE_EQ(soc[5], 20.0);
  EXPECT_DOUBLE_EQ(soc[6], 25.0);
  EXPECT_DOUBLE_EQ(soc[8], 35.0);
  EXPECT_DOUBLE_EQ(soc[4], 40.0);
  EXPECT_DOUBLE_EQ(soc[9], 40.0);
}

TEST(Split, DaytimeOnlyYearGivesNominalPattern) {
  auto h = daytime_year();
  auto plan = split(h);
  expect_valid_plan(h, plan);
  // 12 cycles of 15/5/10 then the remainder: train 0..15, eval 15..20, test 20..30, ...
  ASSERT_GE(plan.segments.size(), 3u);
  EXPECT_EQ(plan.segments[0].days(), 15);
  EXPECT_EQ(plan.segments[1].days(), 5);
  EXPECT_EQ(plan.segments[2].days(), 10);
  for (std::size_t i = 0; i + 1 < plan.segments.size() && i < 36; ++i) {
    long expected = std::array<long, 3>{15, 5, 10}[i % 3];
    EXPECT_EQ(plan.segments[i].days(), expected) << "segment " << i;
  }
}

TEST(Split, OvernightTransactionDefersBoundary) {
  auto h = daytime_year();
  // connected from 20:00 on day 14 to 06:00 on day 15: spans the first nominal boundary
  h.transactions.push_back(fixture::make_tx("night", 14 * 24 + 20, 10, 15));
  std::sort(h.transactions.begin(), h.transactions.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  auto plan = split(h);
  expect_valid_plan(h, plan);
  EXPECT_EQ(plan.segments[0].days(), 16);
}

TEST(Split, RandomOvernightTransactionsProperty) {
  for (unsigned seed = 0; seed < 25; ++seed) {
    std::mt19937 rng(seed);
    auto h = fixture::make_household(8760, [](long) { return 0.0; }, [](long) { return 0.0; });
    long t = std::uniform_int_distribution<long>(0, 30)(rng);
    while (true) {
      long len = std::uniform_int_distribution<long>(1, 40)(rng);
      if (t + len >= 8760) break;
      h.transactions.push_back(fixture::make_tx(std::to_string(t), t, len, 5));
      t += len + std::uniform_int_distribution<long>(1, 60)(rng);
    }
    auto plan = split(h);
    expect_valid_plan(h, plan);
  }
}

TEST(Split, WholeYearTransactionIsInfeasible) {
  auto h = fixture::make_household(8760, [](long) { return 0.0; }, [](long) { return 0.0; });
  h.transactions.push_back(fixture::make_tx("forever", 1, 8758, 5));
  EXPECT_THROW(split(h), DataError);
}

TEST(Split, JsonRoundTrip) {
  auto h = daytime_year();
  auto plan = split(h);
  auto text = split_plan_json(plan, h.origin());
  auto back = parse_split_plan_json(text, h.origin());
  ASSERT_EQ(back.segments.size(), plan.segments.size());
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    EXPECT_EQ(back.segments[i].role, plan.segments[i].role);
    EXPECT_EQ(back.segments[i].start, plan.segments[i].start);
    EXPECT_EQ(back.segments[i].end, plan.segments[i].end);
  }
}

TEST(HouseholdDir, RoundTripIsExact) {
  auto h = daytime_year();
  h.household_id = "hh 7";
  h.spec.ev_capacity_kwh = 43.1234567890123;
  auto dir = std::filesystem::temp_directory_path() / "hems_household_roundtrip";
  std::filesystem::remove_all(dir);
  write_household(dir, h);
  auto back = read_household(dir);
  EXPECT_EQ(back.household_id, h.household_id);
  ASSERT_EQ(back.steps.size(), h.steps.size());
  for (std::size_t i = 0; i < h.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].timestamp, h.steps[i].timestamp);
    EXPECT_EQ(back.steps[i].pv_kwh, h.steps[i].pv_kwh);
    EXPECT_EQ(back.steps[i].demand_kwh, h.steps[i].demand_kwh);
  }
  ASSERT_EQ(back.transactions.size(), h.transactions.size());
  EXPECT_EQ(back.transactions[3].energy_kwh, h.transactions[3].energy_kwh);
  EXPECT_EQ(back.spec.ev_capacity_kwh, h.spec.ev_capacity_kwh);
  std::filesystem::remove_all(dir);
}
