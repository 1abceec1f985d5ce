#pragma once

// Small hand-built households shared by the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hems/domain.hpp"

namespace hems::fixture {

inline Timestamp day0() { return parse_timestamp("2021-03-01T00:00:00"); }

inline Timestamp at_hour(long hour) { return day0() + hours{hour}; }

/// Household over `n_hours` with per-hour PV and demand from callables of the
/// absolute hour index.
inline HouseholdSeries make_household(long n_hours, const std::function<double(long)>& pv,
                                      const std::function<double(long)>& demand,
                                      TechnicalSpec spec = {}) {
  HouseholdSeries h;
  h.household_id = "test";
  h.spec = spec;
  for (long t = 0; t < n_hours; ++t) h.steps.push_back({at_hour(t), pv(t), demand(t)});
  return h;
}

/// Transaction connected for hours [first, first + length) needing `energy` kWh.
inline ChargingTransaction make_tx(const std::string& id, long first, long length, double energy) {
  ChargingTransaction tx;
  tx.id = id;
  tx.start = at_hour(first);
  tx.end = at_hour(first + length);
  tx.energy_kwh = energy;
  return tx;
}

/// Bell-shaped PV between 06:00 and 18:00 peaking at `peak` kW.
inline double daylight_pv(long t, double peak) {
  const double h = static_cast<double>(t % 24);
  if (h < 6 || h > 18) return 0.0;
  const double x = (h - 12.0) / 6.0;
  return std::max(0.0, peak * (1.0 - x * x));
}

}  // namespace hems::fixture
