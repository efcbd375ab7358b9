#include "rtbctl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rtbctl/errors.hpp"

namespace rtbctl {

void validate(const CampaignConfig& cfg) {
  if (cfg.budget < 0.0 || !std::isfinite(cfg.budget)) {
    throw ConfigError("budget must be finite and >= 0");
  }
  if (cfg.round_seconds <= 0) throw ConfigError("round_seconds must be > 0");
  if (!(cfg.b0 > 0.0)) throw ConfigError("b0 must be > 0");
  if (!(cfg.bounds.lo < cfg.bounds.hi)) throw ConfigError("actuator bounds need lo < hi");
  if (cfg.controller == ControllerKind::wl && !(cfg.wl_gamma > 0.0)) {
    throw ConfigError("wl_gamma must be > 0");
  }
  if (cfg.controller != ControllerKind::none) {
    if (cfg.references.empty()) {
      throw ConfigError("controlled campaign needs per-channel references");
    }
    for (const auto& [ch, x_r] : cfg.references) {
      if (!(x_r > 0.0)) {
        throw ConfigError("reference for channel " + std::to_string(ch) +
                          " must be > 0");
      }
    }
  }
  if (cfg.ref_mode == ReferenceMode::dynamic && !(cfg.budget > 0.0)) {
    throw ConfigError("dynamic reference mode needs a budget");
  }
  if (!std::isfinite(cfg.pid.lambda_p) || !std::isfinite(cfg.pid.lambda_i) ||
      !std::isfinite(cfg.pid.lambda_d)) {
    throw ConfigError("PID gains must be finite");
  }
  if (!std::isfinite(cfg.phi_init)) throw ConfigError("phi_init must be finite");
}

namespace {

std::optional<double> measure(Kpi kpi, const KpiCounts& counts) {
  return kpi == Kpi::ecpc ? ecpc(counts) : awr(counts);
}

double phi_of(const ChannelControl& ctl) {
  if (const auto* pid = std::get_if<PidState>(&ctl.state)) return pid->phi;
  if (const auto* wl = std::get_if<WlState>(&ctl.state)) return wl->phi;
  return 0.0;
}

// Per-channel bookkeeping for one replay.
struct ChannelRt {
  ChannelControl ctl;
  KpiCounts cumulative;
  KpiCounts round_events;
  std::vector<RoundRow> rows;
  std::vector<double> measured_series;
  double gain = 1.0;  // exp(clamped phi), refreshed at round boundaries
};

}  // namespace

void run_round_update(ChannelControl& ctl, const CampaignConfig& cfg,
                      std::optional<double> measured, double budget_spent,
                      double dt) {
  if (cfg.controller == ControllerKind::none) return;
  if (!measured) return;  // undefined KPI: phi carries over unchanged

  if (cfg.ref_mode == ReferenceMode::dynamic) {
    // Reshape toward the original campaign target given spend so far.
    const auto next =
        dynamic_reference(ctl.x_r_init, *measured, cfg.budget, budget_spent);
    if (next) {
      ctl.x_r = *next;
    } else {
      ctl.ref_infeasible = true;  // hold the previous reference
    }
  }

  if (auto* pid = std::get_if<PidState>(&ctl.state)) {
    pid_update(*pid, cfg.pid, ctl.x_r, *measured, dt,
               cfg.anti_windup ? std::optional<AntiWindup>(AntiWindup{cfg.bounds})
                               : std::nullopt);
  } else if (auto* wl = std::get_if<WlState>(&ctl.state)) {
    wl_update(*wl, ctl.x_r, *measured);
  }
}

ReplayResult replay(const PreparedLog& log, CampaignConfig cfg, const RoundHook& hook) {
  validate(cfg);
  ReplayResult result;
  if (log.records.empty()) return result;

  const bool controlled = cfg.controller != ControllerKind::none;
  const bool budget_on = cfg.budget > 0.0;
  const std::int64_t ts0 = log.records.front().ts;

  std::map<int, ChannelRt> channels;
  KpiCounts cum;
  KpiCounts round_events;
  double spend = 0.0;
  int round = 1;
  bool alive = true;

  const auto refresh_gain = [&](ChannelRt& rt) {
    rt.gain = std::exp(std::clamp(phi_of(rt.ctl), cfg.bounds.lo, cfg.bounds.hi));
  };

  const auto ensure_channel = [&](int ch) -> ChannelRt& {
    auto it = channels.find(ch);
    if (it != channels.end()) return it->second;
    ChannelRt rt;
    if (controlled) {
      const auto ref = cfg.references.find(ch);
      if (ref == cfg.references.end()) {
        throw DataError("no reference configured for channel " + std::to_string(ch));
      }
      rt.ctl.x_r_init = rt.ctl.x_r = ref->second;
      if (cfg.controller == ControllerKind::pid) {
        PidState st;
        st.phi = cfg.phi_init;
        rt.ctl.state = st;
      } else {
        rt.ctl.state = WlState{cfg.wl_gamma, cfg.phi_init};
      }
    }
    refresh_gain(rt);
    return channels.emplace(ch, std::move(rt)).first->second;
  };

  const auto close_round = [&](bool completed, std::size_t next_record) {
    RoundRow crow;
    crow.round = round;
    crow.cumulative = cum;
    crow.events = round_events;
    for (auto& [ch, rt] : channels) {
      const KpiCounts& basis =
          cfg.window == KpiWindow::cumulative ? rt.cumulative : rt.round_events;
      const auto measured = controlled ? measure(cfg.kpi, basis) : std::nullopt;
      RoundRow row;
      row.round = round;
      row.cumulative = rt.cumulative;
      row.events = rt.round_events;
      row.phi = phi_of(rt.ctl);
      if (controlled) {
        row.x_r = rt.ctl.x_r;
        row.measured = measured;
        rt.measured_series.push_back(
            measured ? *measured : std::numeric_limits<double>::quiet_NaN());
      }
      rt.rows.push_back(row);
      if (channels.size() == 1) {
        crow.phi = row.phi;
        crow.x_r = row.x_r;
        crow.measured = row.measured;
      }
    }
    result.campaign.push_back(crow);

    if (completed && hook) hook(round, next_record, cfg);
    if (completed) {
      for (auto& [ch, rt] : channels) {
        const KpiCounts& basis =
            cfg.window == KpiWindow::cumulative ? rt.cumulative : rt.round_events;
        run_round_update(rt.ctl, cfg, controlled ? measure(cfg.kpi, basis) : std::nullopt,
                         spend, 1.0);
        refresh_gain(rt);
      }
    }
    for (auto& [ch, rt] : channels) rt.round_events = {};
    round_events = {};
  };

  for (std::size_t r = 0; r < log.records.size() && alive; ++r) {
    const auto& rec = log.records[r];
    while (rec.ts >= ts0 + static_cast<std::int64_t>(round) * cfg.round_seconds) {
      close_round(true, r);
      ++round;
    }

    ChannelRt& rt = ensure_channel(rec.channel_id);
    const std::int64_t bid = final_bid_price(cfg.b0 * rec.ctr_ratio * rt.gain);
    const bool won = bid > rec.winning_price;
    if (won && budget_on && spend + static_cast<double>(rec.winning_price) > cfg.budget) {
      // Cannot pay for this win; the campaign halts and the auction is not
      // counted.
      result.budget_exhausted = true;
      break;
    }
    ++cum.bids;
    ++round_events.bids;
    ++rt.cumulative.bids;
    ++rt.round_events.bids;
    if (won) {
      ++cum.wins;
      ++round_events.wins;
      ++rt.cumulative.wins;
      ++rt.round_events.wins;
      cum.cost += rec.winning_price;
      round_events.cost += rec.winning_price;
      rt.cumulative.cost += rec.winning_price;
      rt.round_events.cost += rec.winning_price;
      if (rec.click) {
        ++cum.clicks;
        ++round_events.clicks;
        ++rt.cumulative.clicks;
        ++rt.round_events.clicks;
      }
      spend += static_cast<double>(rec.winning_price);
      if (budget_on && spend >= cfg.budget) {
        result.budget_exhausted = true;
        alive = false;
      }
    }
  }

  // The last round closes without a controller update: nothing runs after it.
  close_round(false, log.records.size());

  result.rounds = round;
  result.final_counts = cum;
  for (auto& [ch, rt] : channels) {
    ChannelSeries series;
    series.channel = ch;
    series.rows = std::move(rt.rows);
    series.ref_infeasible = rt.ctl.ref_infeasible;
    if (controlled) {
      series.report = control_report(rt.measured_series, rt.ctl.x_r_init);
    }
    result.channels.push_back(std::move(series));
  }
  return result;
}

ReplayResult replay(std::span<const AuctionRecord> records, const CampaignConfig& cfg,
                    const CtrModel& model) {
  return replay(prepare(records, model), cfg);
}

}  // namespace rtbctl
