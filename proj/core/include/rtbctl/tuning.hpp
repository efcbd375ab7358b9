#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtbctl/engine.hpp"

namespace rtbctl {

struct SearchConfig {
  PidParams initial;
  double step_p = 0.0;  // initial +/- step on lambda_p
  double step_i = 0.0;
  double shrink = 0.5;     // step multiplier after each shooting
  int max_iterations = 4;  // P/I alternations
  int max_walk = 32;       // cap on line-search moves per coordinate
};

void validate(const SearchConfig& cfg);

/// Ranking key for a candidate gain pair, summarising a replay across all
/// controlled channels.
struct TuneObjective {
  bool settled = false;   // every channel settled
  int settling = 0;       // worst channel, rounds
  double rmse = 0.0;      // mean steady-state RMSE
  double sd = 0.0;        // mean steady-state SD
  bool rose = false;      // at least reached the band
  double terminal_dist = 0.0;  // mean final distance outside the band
};

/// True when `a` is strictly better: settled candidates beat unsettled ones,
/// then (settling, rmse, sd) lexicographically, then rose, then smaller
/// terminal distance.
bool objective_less(const TuneObjective& a, const TuneObjective& b);

TuneObjective tune_objective(const ReplayResult& result);

struct TraceRow {
  int iter = 0;
  char coord = 'p';
  PidParams params;
  TuneObjective objective;
};

struct SearchResult {
  PidParams best;
  TuneObjective objective;
  std::vector<TraceRow> trace;
};

using ObjectiveFn = std::function<TuneObjective(const PidParams&)>;

/// Coordinate descent with a three-point line search per coordinate: probe
/// center +/- step, walk toward improvement while it lasts, shrink the step,
/// switch coordinate. Candidates are clamped to be non-negative and
/// evaluations are memoised.
SearchResult coordinate_search_fn(const SearchConfig& cfg, const ObjectiveFn& fn);

/// Same search with the objective defined by replaying `log` under `base`
/// with candidate gains.
SearchResult coordinate_search(const SearchConfig& cfg, const PreparedLog& log,
                               const CampaignConfig& base);

struct RetuneConfig {
  SearchConfig search;
  int period_rounds = 10;  // retune after every this many completed rounds
};

struct RetuneEvent {
  int round = 0;
  PidParams before;
  PidParams after;
  bool improved = false;
};

struct RetuneResult {
  ReplayResult replay;
  std::vector<RetuneEvent> events;
};

/// Replays with gains re-searched every `period_rounds` on all data observed
/// so far; controller state carries across the switch. A failed search keeps
/// the current gains.
RetuneResult replay_with_online_retune(const PreparedLog& log, CampaignConfig cfg,
                                       const RetuneConfig& rcfg);

std::string format_trace_csv(std::span<const TraceRow> rows);

}  // namespace rtbctl
