#include "rtbctl/bidder.hpp"

#include <algorithm>
#include <cmath>

#include "rtbctl/errors.hpp"

namespace rtbctl {

double base_bid(const BidStrategy& strategy, std::span<const int> features) {
  if (!(strategy.b0 > 0.0)) throw ConfigError("b0 must be > 0");
  if (strategy.model == nullptr) throw ConfigError("bid strategy needs a CTR model");
  if (!(strategy.model->theta0 > 0.0 && strategy.model->theta0 < 1.0)) {
    throw ConfigError("CTR model theta0 must lie in (0,1)");
  }
  return strategy.b0 * strategy.model->predict(features) / strategy.model->theta0;
}

double actuate(double bid, double phi, const ActuatorBounds& bounds) {
  return bid * std::exp(std::clamp(phi, bounds.lo, bounds.hi));
}

double actuate_linear(double bid, double phi, const ActuatorBounds& bounds) {
  return bid * (1.0 + std::clamp(phi, bounds.lo, bounds.hi));
}

std::int64_t final_bid_price(double bid) {
  if (bid <= 0.0) return 0;
  return std::llround(bid);
}

PreparedLog prepare(std::span<const AuctionRecord> records, const CtrModel& model) {
  if (!(model.theta0 > 0.0 && model.theta0 < 1.0)) {
    throw ConfigError("CTR model theta0 must lie in (0,1)");
  }
  PreparedLog log;
  log.records.reserve(records.size());
  for (const auto& r : records) {
    log.records.push_back({r.ts, r.channel_id, r.winning_price, r.click,
                           model.predict(r.features) / model.theta0});
  }
  log.meta = scan_meta(records);
  return log;
}

}  // namespace rtbctl
