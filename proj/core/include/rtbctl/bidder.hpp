#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtbctl/ctr.hpp"
#include "rtbctl/datalog.hpp"

namespace rtbctl {

/// Linear bidding: bid = b0 * theta / theta0. The base bid b0 is the price
/// offered for an impression of exactly average quality.
struct BidStrategy {
  double b0 = 0.0;  // micro-units
  const CtrModel* model = nullptr;
};

double base_bid(const BidStrategy& strategy, std::span<const int> features);

struct ActuatorBounds {
  double lo = -2.0;
  double hi = 5.0;
};

/// Exponential control actuator: bid * e^phi with phi clamped to bounds.
double actuate(double bid, double phi, const ActuatorBounds& bounds = {});

/// Linear actuator bid * (1 + phi), kept as the known-bad alternative; it
/// goes negative once phi < -1.
double actuate_linear(double bid, double phi, const ActuatorBounds& bounds = {});

/// Rounds to integer micro-units; negative bids are floored to zero
/// (a no-bid).
std::int64_t final_bid_price(double bid);

/// A log record with the model evaluated once up front. ctr_ratio is
/// theta/theta0, so any candidate b0 prices the record as b0 * ctr_ratio.
struct PreparedRecord {
  std::int64_t ts = 0;
  int channel_id = 0;
  std::int64_t winning_price = 0;
  int click = 0;
  double ctr_ratio = 0.0;
};

struct PreparedLog {
  std::vector<PreparedRecord> records;
  LogMeta meta;
};

PreparedLog prepare(std::span<const AuctionRecord> records, const CtrModel& model);

}  // namespace rtbctl
