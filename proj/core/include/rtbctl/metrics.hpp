#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace rtbctl {

struct KpiCounts {
  std::int64_t bids = 0;
  std::int64_t wins = 0;
  std::int64_t clicks = 0;
  std::int64_t cost = 0;  // micro-units

  KpiCounts& operator+=(const KpiCounts& other);
};

/// Validates clicks <= wins <= bids and non-negative cost (DataError).
void validate(const KpiCounts& c);

// KPI ratios; empty when the denominator is zero.
std::optional<double> ecpc(const KpiCounts& c);  // cost / clicks
std::optional<double> awr(const KpiCounts& c);   // wins / bids
std::optional<double> cpm(const KpiCounts& c);   // 1000 * cost / wins
std::optional<double> ctr(const KpiCounts& c);   // clicks / wins

struct KpiSnapshot {
  int round = 0;
  KpiCounts cumulative;
  KpiCounts last_round;
};

/// Control-quality summary of a measured KPI series against a fixed
/// reference, using a +/-10 percent band around x_r (inclusive).
struct ControlReport {
  std::optional<int> rise_round;      // first in-band round, 1-based
  std::optional<int> settling_round;  // first round never left afterwards
  double overshoot_pct = 0.0;         // worst excursion past x_r, percent of x_r
  std::optional<double> rmse_ss;      // steady-state RMSE relative to x_r
  std::optional<double> sd_ss;        // steady-state SD of x/x_r
};

/// `xs` holds one measurement per round; NaN marks rounds where the KPI was
/// undefined (those are never inside the band). Throws ConfigError when
/// x_r <= 0.
ControlReport control_report(std::span<const double> xs, double x_r);

inline constexpr double kSettleBandPct = 0.10;

}  // namespace rtbctl
