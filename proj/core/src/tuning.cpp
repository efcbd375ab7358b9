#include "rtbctl/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <utility>

#include "rtbctl/errors.hpp"

namespace rtbctl {

namespace {

constexpr double kNoSignal = 1e300;  // terminal distance when a KPI never measured

}  // namespace

void validate(const SearchConfig& cfg) {
  if (cfg.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (cfg.max_iterations > 0 && (!(cfg.step_p > 0.0) || !(cfg.step_i > 0.0))) {
    throw ConfigError("search steps must be > 0");
  }
  if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0)) throw ConfigError("shrink must be in (0,1)");
  if (cfg.max_walk < 1) throw ConfigError("max_walk must be >= 1");
}

TuneObjective tune_objective(const ReplayResult& result) {
  TuneObjective obj;
  if (result.channels.empty()) {
    obj.terminal_dist = kNoSignal;
    return obj;
  }
  obj.settled = true;
  obj.rose = true;
  int n_reported = 0;
  for (const auto& ch : result.channels) {
    const auto& rep = ch.report;
    ++n_reported;
    if (rep.settling_round) {
      obj.settling = std::max(obj.settling, *rep.settling_round);
      obj.rmse += rep.rmse_ss.value_or(0.0);
      obj.sd += rep.sd_ss.value_or(0.0);
    } else {
      obj.settled = false;
    }
    if (!rep.rise_round) obj.rose = false;

    double dist = kNoSignal;
    for (auto it = ch.rows.rbegin(); it != ch.rows.rend(); ++it) {
      if (it->measured && std::isfinite(*it->measured)) {
        const double x_r = ch.rows.front().x_r.value_or(0.0);
        dist = x_r > 0.0
                   ? std::max(0.0, std::abs(*it->measured / x_r - 1.0) - kSettleBandPct)
                   : kNoSignal;
        break;
      }
    }
    obj.terminal_dist += dist;
  }
  obj.rmse /= n_reported;
  obj.sd /= n_reported;
  obj.terminal_dist /= n_reported;
  return obj;
}

bool objective_less(const TuneObjective& a, const TuneObjective& b) {
  if (a.settled != b.settled) return a.settled;
  if (a.settled) {
    if (a.settling != b.settling) return a.settling < b.settling;
    if (a.rmse != b.rmse) return a.rmse < b.rmse;
    return a.sd < b.sd;
  }
  if (a.rose != b.rose) return a.rose;
  return a.terminal_dist < b.terminal_dist;
}

SearchResult coordinate_search_fn(const SearchConfig& cfg, const ObjectiveFn& fn) {
  validate(cfg);

  std::map<std::pair<double, double>, TuneObjective> memo;
  std::vector<TraceRow> trace;
  int trace_iter = 0;
  char trace_coord = '-';

  const auto clamped = [](PidParams p) {
    p.lambda_p = std::max(p.lambda_p, 0.0);
    p.lambda_i = std::max(p.lambda_i, 0.0);
    return p;
  };
  const auto eval = [&](const PidParams& p) {
    const auto key = std::make_pair(p.lambda_p, p.lambda_i);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, fn(p)).first;
    trace.push_back({trace_iter, trace_coord, p, it->second});
    return it->second;
  };

  PidParams center = clamped(cfg.initial);
  TuneObjective center_obj = eval(center);
  SearchResult result{center, center_obj, {}};

  double step_p = cfg.step_p;
  double step_i = cfg.step_i;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const bool on_p = iter % 2 == 0;
    double& step = on_p ? step_p : step_i;
    trace_iter = iter + 1;
    trace_coord = on_p ? 'p' : 'i';

    // Probe both neighbors, walk toward improvement while it lasts.
    for (int walk = 0; walk < cfg.max_walk; ++walk) {
      PidParams minus = center;
      PidParams plus = center;
      (on_p ? minus.lambda_p : minus.lambda_i) -= step;
      (on_p ? plus.lambda_p : plus.lambda_i) += step;
      minus = clamped(minus);
      plus = clamped(plus);
      const TuneObjective obj_minus = eval(minus);
      const TuneObjective obj_plus = eval(plus);

      const bool plus_better = objective_less(obj_plus, obj_minus);
      const PidParams& next = plus_better ? plus : minus;
      const TuneObjective& next_obj = plus_better ? obj_plus : obj_minus;
      if (!objective_less(next_obj, center_obj)) break;
      center = next;
      center_obj = next_obj;
      if (objective_less(center_obj, result.objective)) {
        result.best = center;
        result.objective = center_obj;
      }
    }
    step *= cfg.shrink;
  }

  result.trace = std::move(trace);
  return result;
}

SearchResult coordinate_search(const SearchConfig& cfg, const PreparedLog& log,
                               const CampaignConfig& base) {
  if (base.controller != ControllerKind::pid) {
    throw ConfigError("coordinate search tunes PID campaigns");
  }
  return coordinate_search_fn(cfg, [&](const PidParams& p) {
    CampaignConfig candidate = base;
    candidate.pid = p;
    candidate.pid.lambda_d = base.pid.lambda_d;  // fixed, never searched
    return tune_objective(replay(log, candidate));
  });
}

RetuneResult replay_with_online_retune(const PreparedLog& log, CampaignConfig cfg,
                                       const RetuneConfig& rcfg) {
  if (rcfg.period_rounds < 1) throw ConfigError("period_rounds must be >= 1");
  validate(rcfg.search);

  RetuneResult out;
  const RoundHook hook = [&](int round, std::size_t next_record, CampaignConfig& live) {
    if (round % rcfg.period_rounds != 0 || next_record == 0) return;

    PreparedLog prefix;
    prefix.records.assign(log.records.begin(),
                          log.records.begin() + static_cast<std::ptrdiff_t>(next_record));
    prefix.meta = log.meta;

    SearchConfig search = rcfg.search;
    search.initial = live.pid;

    RetuneEvent event;
    event.round = round;
    event.before = live.pid;
    event.after = live.pid;
    try {
      const SearchResult found = coordinate_search(search, prefix, live);
      event.after = found.best;
      event.improved = found.best.lambda_p != live.pid.lambda_p ||
                       found.best.lambda_i != live.pid.lambda_i;
      live.pid = found.best;
    } catch (const Error&) {
      // Search failed: keep the gains we have.
    }
    out.events.push_back(event);
  };

  out.replay = replay(log, cfg, hook);
  return out;
}

std::string format_trace_csv(std::span<const TraceRow> rows) {
  std::string out = "iter,coord,lambda_p,lambda_i,settling,rmse_ss,sd_ss\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%c,%.10g,%.10g,", row.iter, row.coord,
                  row.params.lambda_p, row.params.lambda_i);
    out += buf;
    if (row.objective.settled) {
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g", row.objective.settling,
                    row.objective.rmse, row.objective.sd);
      out += buf;
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

}  // namespace rtbctl
