#include "rtbctl/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rtbctl/errors.hpp"

namespace rtbctl {

namespace {

using nlohmann::json;

[[noreturn]] void unknown(const char* what, const std::string& value) {
  throw ConfigError(std::string("unknown ") + what + " '" + value + "'");
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

std::int64_t get_int(const json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(std::string(key) + " must be an integer");
  }
  return j.at(key).get<std::int64_t>();
}

SynthConfig synth_from_json(const json& j) {
  SynthConfig cfg;
  cfg.n_records = static_cast<std::size_t>(get_int(j, "n_records", 0));
  cfg.n_channels = static_cast<int>(get_int(j, "n_channels", 1));
  if (j.contains("price_mu")) cfg.price_mu = j.at("price_mu").get<std::vector<double>>();
  if (j.contains("price_sigma")) {
    cfg.price_sigma = j.at("price_sigma").get<std::vector<double>>();
  }
  cfg.n_features = static_cast<int>(get_int(j, "n_features", 1));
  if (j.contains("ctr_weights")) {
    cfg.ctr_weights = j.at("ctr_weights").get<std::vector<double>>();
  }
  cfg.ctr_bias = get_num(j, "ctr_bias", 0.0);
  cfg.sparsity_k = static_cast<int>(get_int(j, "sparsity_k", 1));
  cfg.ts_start = get_int(j, "ts_start", 0);
  cfg.duration_seconds = get_int(j, "duration_seconds", 0);
  cfg.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
  return cfg;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = get_num(j, "learning_rate", cfg.learning_rate);
  cfg.l2 = get_num(j, "l2", cfg.l2);
  cfg.epochs = static_cast<int>(get_int(j, "epochs", cfg.epochs));
  cfg.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
  return cfg;
}

CampaignConfig campaign_from_json(const json& j) {
  CampaignConfig cfg;
  cfg.budget = get_num(j, "budget", cfg.budget);
  cfg.round_seconds = get_int(j, "round_seconds", cfg.round_seconds);
  if (j.contains("kpi")) cfg.kpi = kpi_from_string(j.at("kpi").get<std::string>());
  if (j.contains("controller")) {
    cfg.controller = controller_from_string(j.at("controller").get<std::string>());
  }
  if (j.contains("reference_mode")) {
    cfg.ref_mode = reference_mode_from_string(j.at("reference_mode").get<std::string>());
  }
  if (j.contains("window")) {
    cfg.window = window_from_string(j.at("window").get<std::string>());
  }
  if (j.contains("references")) {
    for (const auto& [key, value] : j.at("references").items()) {
      cfg.references[std::stoi(key)] = value.get<double>();
    }
  }
  cfg.b0 = get_num(j, "b0", cfg.b0);
  cfg.bounds.lo = get_num(j, "phi_min", cfg.bounds.lo);
  cfg.bounds.hi = get_num(j, "phi_max", cfg.bounds.hi);
  cfg.pid.lambda_p = get_num(j, "lambda_p", cfg.pid.lambda_p);
  cfg.pid.lambda_i = get_num(j, "lambda_i", cfg.pid.lambda_i);
  cfg.pid.lambda_d = get_num(j, "lambda_d", cfg.pid.lambda_d);
  cfg.wl_gamma = get_num(j, "wl_gamma", cfg.wl_gamma);
  if (j.contains("anti_windup")) cfg.anti_windup = j.at("anti_windup").get<bool>();
  cfg.phi_init = get_num(j, "phi_init", cfg.phi_init);
  cfg.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
  return cfg;
}

SearchConfig search_from_json(const json& j) {
  SearchConfig cfg;
  cfg.initial.lambda_p = get_num(j, "lambda_p", cfg.initial.lambda_p);
  cfg.initial.lambda_i = get_num(j, "lambda_i", cfg.initial.lambda_i);
  cfg.initial.lambda_d = get_num(j, "lambda_d", cfg.initial.lambda_d);
  cfg.step_p = get_num(j, "step_p", cfg.step_p);
  cfg.step_i = get_num(j, "step_i", cfg.step_i);
  cfg.shrink = get_num(j, "shrink", cfg.shrink);
  cfg.max_iterations = static_cast<int>(get_int(j, "max_iterations", cfg.max_iterations));
  cfg.max_walk = static_cast<int>(get_int(j, "max_walk", cfg.max_walk));
  return cfg;
}

}  // namespace

Kpi kpi_from_string(const std::string& s) {
  if (s == "ecpc") return Kpi::ecpc;
  if (s == "awr") return Kpi::awr;
  unknown("kpi", s);
}

std::string to_string(Kpi k) { return k == Kpi::ecpc ? "ecpc" : "awr"; }

ControllerKind controller_from_string(const std::string& s) {
  if (s == "pid") return ControllerKind::pid;
  if (s == "wl" || s == "waterlevel") return ControllerKind::wl;
  if (s == "none") return ControllerKind::none;
  unknown("controller", s);
}

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::pid: return "pid";
    case ControllerKind::wl: return "wl";
    default: return "none";
  }
}

ReferenceMode reference_mode_from_string(const std::string& s) {
  if (s == "static" || s == "fixed") return ReferenceMode::fixed;
  if (s == "dynamic") return ReferenceMode::dynamic;
  unknown("reference mode", s);
}

std::string to_string(ReferenceMode m) {
  return m == ReferenceMode::fixed ? "static" : "dynamic";
}

KpiWindow window_from_string(const std::string& s) {
  if (s == "cumulative") return KpiWindow::cumulative;
  if (s == "per_round") return KpiWindow::per_round;
  unknown("window", s);
}

std::string to_string(KpiWindow w) {
  return w == KpiWindow::cumulative ? "cumulative" : "per_round";
}

std::string to_json_string(const CampaignConfig& cfg) {
  json refs = json::object();
  for (const auto& [ch, x_r] : cfg.references) refs[std::to_string(ch)] = x_r;
  json j{{"budget", cfg.budget},
         {"round_seconds", cfg.round_seconds},
         {"kpi", to_string(cfg.kpi)},
         {"controller", to_string(cfg.controller)},
         {"reference_mode", to_string(cfg.ref_mode)},
         {"window", to_string(cfg.window)},
         {"references", refs},
         {"b0", cfg.b0},
         {"phi_min", cfg.bounds.lo},
         {"phi_max", cfg.bounds.hi},
         {"lambda_p", cfg.pid.lambda_p},
         {"lambda_i", cfg.pid.lambda_i},
         {"lambda_d", cfg.pid.lambda_d},
         {"wl_gamma", cfg.wl_gamma},
         {"anti_windup", cfg.anti_windup},
         {"phi_init", cfg.phi_init},
         {"seed", cfg.seed}};
  return j.dump(2) + "\n";
}

CampaignConfig campaign_config_from_json_string(const std::string& text) {
  try {
    return campaign_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad campaign JSON: ") + e.what());
  }
}

RunConfig run_config_from_json_string(const std::string& text,
                                      const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }

  const auto resolve = [&](const std::string& p) -> std::filesystem::path {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) return base_dir / path;
    return path;
  };

  RunConfig cfg;
  try {
    if (j.contains("paths")) {
      const auto& paths = j.at("paths");
      if (paths.contains("train_log")) {
        cfg.paths.train_log = resolve(paths.at("train_log").get<std::string>());
      }
      if (paths.contains("test_log")) {
        cfg.paths.test_log = resolve(paths.at("test_log").get<std::string>());
      }
      if (paths.contains("out_dir")) {
        cfg.paths.out_dir = resolve(paths.at("out_dir").get<std::string>());
      }
    }
    if (j.contains("gen_train")) cfg.gen_train = synth_from_json(j.at("gen_train"));
    if (j.contains("gen_test")) cfg.gen_test = synth_from_json(j.at("gen_test"));
    if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      cfg.sweep.b0 = get_num(s, "b0", 0.0);
      if (s.contains("multipliers")) {
        cfg.sweep.multipliers = s.at("multipliers").get<std::vector<double>>();
      }
    }
    if (j.contains("campaign")) cfg.campaign = campaign_from_json(j.at("campaign"));
    if (j.contains("budget")) {
      // A top-level budget is the single source for both the optimizer and
      // the campaign.
      cfg.campaign.budget = j.at("budget").get<double>();
    }
    if (j.contains("search")) cfg.search = search_from_json(j.at("search"));
    if (j.contains("retune")) {
      RetuneConfig r;
      r.period_rounds =
          static_cast<int>(get_int(j.at("retune"), "period_rounds", r.period_rounds));
      if (j.at("retune").contains("search")) {
        r.search = search_from_json(j.at("retune").at("search"));
      } else {
        r.search = cfg.search;
      }
      cfg.retune = r;
    }
    if (j.contains("uniform")) cfg.uniform = j.at("uniform").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_json_string(buf.str(), path.parent_path());
}

}  // namespace rtbctl
