#include "rtbctl/report.hpp"

#include <cstdio>

#include <json.hpp>

#include "rtbctl/config.hpp"

namespace rtbctl {

namespace {

void append_opt(std::string& out, const std::optional<double>& value) {
  if (value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", *value);
    out += buf;
  }
}

nlohmann::json counts_json(const KpiCounts& c) {
  nlohmann::json j{{"bids", c.bids}, {"wins", c.wins}, {"clicks", c.clicks},
                   {"cost", c.cost}};
  const auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("ecpc", ecpc(c));
  put("awr", awr(c));
  put("cpm", cpm(c));
  put("ctr", ctr(c));
  return j;
}

nlohmann::json report_json(const ControlReport& r) {
  nlohmann::json j;
  j["rise_round"] = r.rise_round ? nlohmann::json(*r.rise_round) : nlohmann::json(nullptr);
  j["settling_round"] =
      r.settling_round ? nlohmann::json(*r.settling_round) : nlohmann::json(nullptr);
  j["overshoot_pct"] = r.overshoot_pct;
  j["rmse_ss"] = r.rmse_ss ? nlohmann::json(*r.rmse_ss) : nlohmann::json(nullptr);
  j["sd_ss"] = r.sd_ss ? nlohmann::json(*r.sd_ss) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string format_series_csv(std::span<const RoundRow> rows) {
  std::string out = "round,bids,wins,clicks,cost,ecpc,awr,cpm,ctr,phi,x_r\n";
  char buf[96];
  for (const auto& row : rows) {
    const KpiCounts& c = row.cumulative;
    std::snprintf(buf, sizeof(buf), "%d,%lld,%lld,%lld,%lld,", row.round,
                  static_cast<long long>(c.bids), static_cast<long long>(c.wins),
                  static_cast<long long>(c.clicks), static_cast<long long>(c.cost));
    out += buf;
    append_opt(out, ecpc(c));
    out += ',';
    append_opt(out, awr(c));
    out += ',';
    append_opt(out, cpm(c));
    out += ',';
    append_opt(out, ctr(c));
    out += ',';
    std::snprintf(buf, sizeof(buf), "%.10g,", row.phi);
    out += buf;
    append_opt(out, row.x_r);
    out += '\n';
  }
  return out;
}

std::string to_json_string(const ControlReport& report) {
  return report_json(report).dump(2) + "\n";
}

std::string replay_report_json(const ReplayResult& result, const CampaignConfig& cfg) {
  nlohmann::json j;
  j["controller"] = to_string(cfg.controller);
  j["kpi"] = to_string(cfg.kpi);
  j["rounds"] = result.rounds;
  j["budget_exhausted"] = result.budget_exhausted;
  j["final"] = counts_json(result.final_counts);
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : result.channels) {
    nlohmann::json cj;
    cj["channel"] = ch.channel;
    cj["final"] = counts_json(ch.rows.empty() ? KpiCounts{} : ch.rows.back().cumulative);
    if (cfg.controller != ControllerKind::none) {
      const auto ref = cfg.references.find(ch.channel);
      if (ref != cfg.references.end()) cj["x_r"] = ref->second;
      cj["ref_infeasible"] = ch.ref_infeasible;
      cj["report"] = report_json(ch.report);
    }
    channels.push_back(cj);
  }
  j["channels"] = channels;
  return j.dump(2) + "\n";
}

}  // namespace rtbctl
