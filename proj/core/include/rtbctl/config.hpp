#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rtbctl/ctr.hpp"
#include "rtbctl/datalog.hpp"
#include "rtbctl/engine.hpp"
#include "rtbctl/tuning.hpp"

namespace rtbctl {

// Enum <-> config-string conversions. Unknown strings throw ConfigError.
Kpi kpi_from_string(const std::string& s);
std::string to_string(Kpi k);
ControllerKind controller_from_string(const std::string& s);
std::string to_string(ControllerKind k);
ReferenceMode reference_mode_from_string(const std::string& s);  // "static" or "dynamic"
std::string to_string(ReferenceMode m);
KpiWindow window_from_string(const std::string& s);
std::string to_string(KpiWindow w);

struct SweepSpec {
  double b0 = 0.0;                  // defaults to the campaign b0 when 0
  std::vector<double> multipliers;  // empty means default_multipliers()
};

struct RunPaths {
  std::filesystem::path train_log;
  std::filesystem::path test_log;
  std::filesystem::path out_dir;
};

/// One experiment document, as read from a JSON config file. Paths are
/// resolved relative to the config file's directory so a run folder can be
/// copied wholesale.
struct RunConfig {
  RunPaths paths;
  std::optional<SynthConfig> gen_train;
  std::optional<SynthConfig> gen_test;
  TrainConfig train;
  SweepSpec sweep;
  CampaignConfig campaign;  // campaign.budget is the shared experiment budget
  SearchConfig search;
  std::optional<RetuneConfig> retune;
  bool uniform = false;  // plan a single campaign-wide reference
};

RunConfig run_config_from_json_string(const std::string& text,
                                      const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::string to_json_string(const CampaignConfig& cfg);
CampaignConfig campaign_config_from_json_string(const std::string& text);

}  // namespace rtbctl
