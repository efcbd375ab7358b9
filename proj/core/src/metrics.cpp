#include "rtbctl/metrics.hpp"

#include <cmath>

#include "rtbctl/errors.hpp"

namespace rtbctl {

KpiCounts& KpiCounts::operator+=(const KpiCounts& other) {
  bids += other.bids;
  wins += other.wins;
  clicks += other.clicks;
  cost += other.cost;
  return *this;
}

void validate(const KpiCounts& c) {
  if (c.bids < 0 || c.wins < 0 || c.clicks < 0 || c.cost < 0) {
    throw DataError("KPI counts must be non-negative");
  }
  if (c.wins > c.bids) throw DataError("wins exceed bids");
  if (c.clicks > c.wins) throw DataError("clicks exceed wins");
}

std::optional<double> ecpc(const KpiCounts& c) {
  if (c.clicks == 0) return std::nullopt;
  return static_cast<double>(c.cost) / static_cast<double>(c.clicks);
}

std::optional<double> awr(const KpiCounts& c) {
  if (c.bids == 0) return std::nullopt;
  return static_cast<double>(c.wins) / static_cast<double>(c.bids);
}

std::optional<double> cpm(const KpiCounts& c) {
  if (c.wins == 0) return std::nullopt;
  return 1000.0 * static_cast<double>(c.cost) / static_cast<double>(c.wins);
}

std::optional<double> ctr(const KpiCounts& c) {
  if (c.wins == 0) return std::nullopt;
  return static_cast<double>(c.clicks) / static_cast<double>(c.wins);
}

ControlReport control_report(std::span<const double> xs, double x_r) {
  if (xs.empty()) throw ConfigError("control report needs a non-empty series");
  if (!(x_r > 0.0)) throw ConfigError("control report needs x_r > 0");

  const double lo = x_r * (1.0 - kSettleBandPct);
  const double hi = x_r * (1.0 + kSettleBandPct);
  const auto in_band = [&](double x) { return std::isfinite(x) && x >= lo && x <= hi; };

  ControlReport report;
  const int n = static_cast<int>(xs.size());

  for (int k = 0; k < n; ++k) {
    if (in_band(xs[k])) {
      report.rise_round = k + 1;
      break;
    }
  }

  if (in_band(xs[n - 1])) {
    int first = n - 1;
    while (first > 0 && in_band(xs[first - 1])) --first;
    report.settling_round = first + 1;
  }

  // Overshoot: how far the series swings past x_r against the side it
  // started on. A monotone approach that never crosses scores zero.
  int sign = 0;  // +1 when approaching from above
  for (double x : xs) {
    if (std::isfinite(x) && x != x_r) {
      sign = x > x_r ? 1 : -1;
      break;
    }
  }
  double worst = 0.0;
  if (sign != 0) {
    for (double x : xs) {
      if (!std::isfinite(x)) continue;
      const double excursion = sign > 0 ? (x_r - x) : (x - x_r);
      worst = std::max(worst, excursion);
    }
  }
  report.overshoot_pct = 100.0 * worst / x_r;

  if (report.settling_round) {
    const int start = *report.settling_round - 1;
    const int m = n - start;
    double sq = 0.0;
    double mean_ratio = 0.0;
    for (int k = start; k < n; ++k) {
      const double rel = (xs[k] - x_r) / x_r;
      sq += rel * rel;
      mean_ratio += xs[k] / x_r;
    }
    mean_ratio /= m;
    double var = 0.0;
    for (int k = start; k < n; ++k) {
      const double d = xs[k] / x_r - mean_ratio;
      var += d * d;
    }
    report.rmse_ss = std::sqrt(sq / m);
    report.sd_ss = std::sqrt(var / m);
  }
  return report;
}

}  // namespace rtbctl
