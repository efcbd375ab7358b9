#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rtbctl/bidder.hpp"
#include "rtbctl/control.hpp"
#include "rtbctl/metrics.hpp"

namespace rtbctl {

enum class Kpi { ecpc, awr };
enum class ControllerKind { pid, wl, none };
enum class ReferenceMode { fixed, dynamic };
/// Which window feeds the controller: KPIs since campaign start, or the
/// last round only.
enum class KpiWindow { cumulative, per_round };

struct CampaignConfig {
  double budget = 0.0;  // micro-units; 0 disables the budget
  std::int64_t round_seconds = 7200;
  Kpi kpi = Kpi::ecpc;
  ControllerKind controller = ControllerKind::pid;
  ReferenceMode ref_mode = ReferenceMode::fixed;
  KpiWindow window = KpiWindow::cumulative;
  std::map<int, double> references;  // channel -> x_r
  double b0 = 0.0;
  ActuatorBounds bounds;
  PidParams pid;
  double wl_gamma = 0.0;
  bool anti_windup = true;
  double phi_init = 0.0;
  std::uint64_t seed = 0;  // recorded for provenance; the replay itself is RNG-free
};

void validate(const CampaignConfig& cfg);

/// Per-round output row, either campaign-wide or for one channel.
struct RoundRow {
  int round = 0;  // 1-based
  KpiCounts cumulative;
  KpiCounts events;                // this round only
  double phi = 0.0;                // actuation applied during this round
  std::optional<double> x_r;       // reference in force (controlled channels)
  std::optional<double> measured;  // controlled KPI after this round
};

struct ChannelSeries {
  int channel = 0;
  std::vector<RoundRow> rows;
  ControlReport report;       // vs the channel's initial reference
  bool ref_infeasible = false;  // dynamic reference ran out of room
};

struct ReplayResult {
  std::vector<RoundRow> campaign;
  std::vector<ChannelSeries> channels;
  KpiCounts final_counts;
  bool budget_exhausted = false;
  int rounds = 0;
};

/// Per-channel controller bookkeeping, exposed so the round update can be
/// exercised directly and so online retuning can rewrite gains mid-flight.
struct ChannelControl {
  std::variant<std::monostate, PidState, WlState> state;
  double x_r_init = 0.0;  // as configured
  double x_r = 0.0;       // possibly reshaped by dynamic reference
  bool ref_infeasible = false;
};

/// Applies the end-of-round controller update for one channel: dynamic
/// reference reshaping first (when enabled), then the controller step on the
/// measured KPI. Rounds with an undefined KPI leave the state untouched.
void run_round_update(ChannelControl& ctl, const CampaignConfig& cfg,
                      std::optional<double> measured, double budget_spent,
                      double dt);

/// Called after each completed round, before its phi takes effect; may edit
/// the config (gains) for the remaining rounds. `next_record` indexes the
/// first record of the following round.
using RoundHook =
    std::function<void(int completed_round, std::size_t next_record, CampaignConfig&)>;

/// Replays the log under the configured controller and budget. Rounds are
/// fixed-length windows anchored at the first record's timestamp; empty
/// rounds still close and update the controller.
ReplayResult replay(const PreparedLog& log, CampaignConfig cfg,
                    const RoundHook& hook = {});
ReplayResult replay(std::span<const AuctionRecord> records, const CampaignConfig& cfg,
                    const CtrModel& model);

}  // namespace rtbctl
