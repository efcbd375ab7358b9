#pragma once

#include <span>
#include <string>

#include "rtbctl/engine.hpp"
#include "rtbctl/metrics.hpp"

namespace rtbctl {

/// Round time series in the wire schema
/// `round,bids,wins,clicks,cost,ecpc,awr,cpm,ctr,phi,x_r`.
/// Counts and ratios are cumulative; undefined ratios and absent references
/// leave the cell empty.
std::string format_series_csv(std::span<const RoundRow> rows);

std::string to_json_string(const ControlReport& report);

/// Full replay summary (finals, per-channel reports, round counts) as a JSON
/// document. Channel entries carry a "report" object only when a controller
/// was active.
std::string replay_report_json(const ReplayResult& result, const CampaignConfig& cfg);

}  // namespace rtbctl
