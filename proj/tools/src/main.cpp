// rtbctl: experiment driver for the bid-control library. Every subcommand
// reads one JSON config document, writes its artifacts under the run's
// out-dir and records a manifest with content hashes.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtbctl/config.hpp"
#include "rtbctl/ctr.hpp"
#include "rtbctl/datalog.hpp"
#include "rtbctl/engine.hpp"
#include "rtbctl/errors.hpp"
#include "rtbctl/refopt.hpp"
#include "rtbctl/report.hpp"
#include "rtbctl/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModelFile = "ctr_model.json";
constexpr const char* kCurvesFile = "curves.json";
constexpr const char* kClicksFile = "clicks.json";
constexpr const char* kPlanFile = "plan.json";
constexpr const char* kTunedFile = "tuned.json";
constexpr const char* kTraceFile = "tuning_trace.csv";
constexpr const char* kCampaignCsv = "series_campaign.csv";
constexpr const char* kReportFile = "report.json";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rtbctl::DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rtbctl::DataError("cannot write " + path.string());
  out << content;
  if (!out) throw rtbctl::DataError("failed writing " + path.string());
}

struct Shared {
  std::string config;
  std::optional<std::int64_t> seed;
  std::string out_dir;
  int jobs = 1;
};

void add_shared(CLI::App* cmd, Shared& shared) {
  cmd->add_option("--config", shared.config, "JSON config document")->required();
  cmd->add_option("--seed", shared.seed, "override configured seeds");
  cmd->add_option("--out-dir", shared.out_dir, "override the configured out-dir");
  cmd->add_option("--jobs", shared.jobs, "max concurrent replays")
      ->check(CLI::PositiveNumber);
}

struct Run {
  rtbctl::RunConfig cfg;
  json raw;  // the config document as written, for report embedding
  fs::path config_path;
  fs::path out_dir;
  fs::path train_log;
  fs::path test_log;
};

Run load_run(const Shared& shared) {
  Run run;
  run.config_path = shared.config;
  run.cfg = rtbctl::load_run_config(run.config_path);
  try {
    run.raw = json::parse(read_file(run.config_path));
  } catch (const json::exception& e) {
    throw rtbctl::ConfigError(std::string("bad config JSON: ") + e.what());
  }

  run.out_dir = !shared.out_dir.empty() ? fs::path(shared.out_dir)
               : !run.cfg.paths.out_dir.empty() ? run.cfg.paths.out_dir
                                                : fs::path(".");
  run.train_log = !run.cfg.paths.train_log.empty() ? run.cfg.paths.train_log
                                                   : run.out_dir / "train.tsv";
  run.test_log = !run.cfg.paths.test_log.empty() ? run.cfg.paths.test_log
                                                 : run.out_dir / "test.tsv";

  if (shared.seed) {
    const auto s = static_cast<std::uint64_t>(*shared.seed);
    if (run.cfg.gen_train) run.cfg.gen_train->seed = s;
    if (run.cfg.gen_test) run.cfg.gen_test->seed = s + 1;
    run.cfg.train.seed = s;
    run.cfg.campaign.seed = s;
  }
  return run;
}

class Manifest {
 public:
  Manifest(std::string command, const Run& run, const Shared& shared)
      : command_(std::move(command)), out_dir_(run.out_dir) {
    doc_["command"] = command_;
    doc_["config"] = run.config_path.string();
    doc_["seed"] = shared.seed ? json(*shared.seed) : json(nullptr);
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::object();
  }

  void input(const std::string& name, const fs::path& path) {
    doc_["inputs"][name] = rel(path);
  }

  // Registers an artifact after it has been written; hashes its bytes.
  void output(const fs::path& path) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file(path))));
    doc_["outputs"][rel(path)] = std::string("fnv1a64:") + hex;
  }

  void extra(const std::string& key, const json& value) { doc_[key] = value; }

  void write() const {
    write_file(out_dir_ / ("manifest_" + command_ + ".json"), doc_.dump(2) + "\n");
  }

 private:
  // Paths inside the run dir are stored relative so two runs of the same
  // config land byte-identical artifacts regardless of where they live.
  std::string rel(const fs::path& path) const {
    std::error_code ec;
    const fs::path r = fs::relative(path, out_dir_, ec);
    if (!ec && !r.empty() && r.native().rfind("..", 0) != 0) return r.string();
    return path.filename().string();
  }

  std::string command_;
  fs::path out_dir_;
  json doc_;
};

// ---- gen ----

int cmd_gen(const Shared& shared) {
  Run run = load_run(shared);
  if (!run.cfg.gen_train && !run.cfg.gen_test) {
    throw rtbctl::ConfigError("gen: config has neither gen_train nor gen_test");
  }
  Manifest manifest("gen", run, shared);
  if (run.cfg.gen_train) {
    const auto records = rtbctl::generate_log(*run.cfg.gen_train);
    if (run.train_log.has_parent_path()) fs::create_directories(run.train_log.parent_path());
    rtbctl::write_log(run.train_log, records);
    manifest.output(run.train_log);
    std::cout << "gen: wrote " << records.size() << " records to "
              << run.train_log.string() << "\n";
  }
  if (run.cfg.gen_test) {
    const auto records = rtbctl::generate_log(*run.cfg.gen_test);
    if (run.test_log.has_parent_path()) fs::create_directories(run.test_log.parent_path());
    rtbctl::write_log(run.test_log, records);
    manifest.output(run.test_log);
    std::cout << "gen: wrote " << records.size() << " records to "
              << run.test_log.string() << "\n";
  }
  manifest.write();
  return 0;
}

// ---- train-ctr ----

int cmd_train_ctr(const Shared& shared) {
  Run run = load_run(shared);
  Manifest manifest("train-ctr", run, shared);
  manifest.input("train_log", run.train_log);
  const auto log = rtbctl::parse_log(run.train_log);
  const auto model = rtbctl::train_ctr(log.records, run.cfg.train);
  const fs::path out = run.out_dir / kModelFile;
  write_file(out, rtbctl::to_json_string(model));
  manifest.output(out);
  manifest.write();
  std::cout << "train-ctr: theta0=" << model.theta0 << ", " << model.weights.size()
            << " weights -> " << out.string() << "\n";
  return 0;
}

// ---- sweep ----

struct SweepOutcome {
  int channel = 0;
  std::optional<rtbctl::EcpcPoint> history;
  std::vector<rtbctl::EcpcPoint> points;
  std::string error;  // non-empty when the channel produced no usable points
};

json sweep_to_json(const SweepOutcome& o) {
  json j{{"id", o.channel}};
  if (!o.error.empty()) {
    j["error"] = o.error;
    return j;
  }
  j["c_star"] = o.history->clicks;
  j["xi_star"] = o.history->xi;
  json points = json::array();
  for (const auto& p : o.points) points.push_back({{"xi", p.xi}, {"clicks", p.clicks}});
  j["points"] = points;
  return j;
}

std::vector<SweepOutcome> run_sweeps(const rtbctl::ParsedLog& raw,
                                     const rtbctl::PreparedLog& prepared, double b0,
                                     const std::vector<double>& multipliers, int jobs) {
  std::vector<int> channels;
  channels.push_back(rtbctl::kAllChannels);
  for (int ch = 0; ch < raw.meta.n_channels; ++ch) channels.push_back(ch);

  const auto sweep_one = [&](int ch) {
    SweepOutcome o;
    o.channel = ch;
    o.history = rtbctl::channel_history(raw.records, ch);
    if (!o.history) {
      o.error = "no clicks in the log";
      return o;
    }
    try {
      o.points = rtbctl::sweep_channel(prepared, ch, b0, multipliers);
    } catch (const rtbctl::UnfittableChannelError& e) {
      o.error = e.what();
    }
    return o;
  };

  std::vector<SweepOutcome> out(channels.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < channels.size(); ++i) out[i] = sweep_one(channels[i]);
    return out;
  }
  std::size_t next = 0;
  while (next < channels.size()) {
    const std::size_t batch =
        std::min(static_cast<std::size_t>(jobs), channels.size() - next);
    std::vector<std::future<SweepOutcome>> futs;
    for (std::size_t i = 0; i < batch; ++i) {
      futs.push_back(std::async(std::launch::async, sweep_one, channels[next + i]));
    }
    for (std::size_t i = 0; i < batch; ++i) out[next + i] = futs[i].get();
    next += batch;
  }
  return out;
}

int cmd_sweep(const Shared& shared) {
  Run run = load_run(shared);
  Manifest manifest("sweep", run, shared);
  manifest.input("train_log", run.train_log);
  manifest.input("model", run.out_dir / kModelFile);

  const auto raw = rtbctl::parse_log(run.train_log);
  const auto model = rtbctl::load_ctr_model(run.out_dir / kModelFile);
  const auto prepared = rtbctl::prepare(raw.records, model);
  const double b0 = run.cfg.sweep.b0 > 0.0 ? run.cfg.sweep.b0 : run.cfg.campaign.b0;
  const auto multipliers = run.cfg.sweep.multipliers.empty()
                               ? rtbctl::default_multipliers()
                               : run.cfg.sweep.multipliers;
  const auto outcomes = run_sweeps(raw, prepared, b0, multipliers, shared.jobs);

  bool any_ok = false;
  json channels = json::array();
  for (const auto& o : outcomes) {
    channels.push_back(sweep_to_json(o));
    if (o.error.empty()) any_ok = true;
  }
  if (!any_ok) throw rtbctl::UnfittableChannelError("sweep: no channel produced clicks");

  const fs::path out = run.out_dir / kCurvesFile;
  write_file(out, json{{"b0", b0}, {"channels", channels}}.dump(2) + "\n");
  manifest.output(out);
  manifest.write();
  std::cout << "sweep: " << outcomes.size() << " curves -> " << out.string() << "\n";
  return 0;
}

// ---- fit-clicks ----

int cmd_fit_clicks(const Shared& shared) {
  Run run = load_run(shared);
  Manifest manifest("fit-clicks", run, shared);
  const fs::path curves_path = run.out_dir / kCurvesFile;
  manifest.input("curves", curves_path);

  json curves;
  try {
    curves = json::parse(read_file(curves_path));
  } catch (const json::exception& e) {
    throw rtbctl::DataError(std::string("bad curves JSON: ") + e.what());
  }

  json fitted = json::array();
  bool any_ok = false;
  for (const auto& ch : curves.at("channels")) {
    json entry{{"id", ch.at("id").get<int>()}};
    if (ch.contains("error")) {
      entry["error"] = ch.at("error");
      fitted.push_back(entry);
      continue;
    }
    std::vector<rtbctl::EcpcPoint> points;
    for (const auto& p : ch.at("points")) {
      points.push_back({p.at("xi").get<double>(), p.at("clicks").get<double>()});
    }
    try {
      const auto fit = rtbctl::fit_click_function(points, ch.at("c_star").get<double>(),
                                                  ch.at("xi_star").get<double>(),
                                                  ch.at("id").get<int>());
      entry["a"] = fit.fn.a;
      entry["b"] = fit.fn.b;
      entry["c_star"] = fit.fn.c_star;
      entry["xi_star"] = fit.fn.xi_star;
      entry["b_clipped"] = fit.b_clipped;
      any_ok = true;
    } catch (const rtbctl::UnfittableChannelError& e) {
      entry["error"] = e.what();
    }
    fitted.push_back(entry);
  }
  if (!any_ok) throw rtbctl::UnfittableChannelError("fit-clicks: no channel fitted");

  const fs::path out = run.out_dir / kClicksFile;
  write_file(out, json{{"channels", fitted}}.dump(2) + "\n");
  manifest.output(out);
  manifest.write();
  std::cout << "fit-clicks: -> " << out.string() << "\n";
  return 0;
}

// ---- solve-refs ----

rtbctl::ClickFunction fn_from_json(const json& j) {
  rtbctl::ClickFunction fn;
  fn.channel = j.at("id").get<int>();
  fn.a = j.at("a").get<double>();
  fn.b = j.at("b").get<double>();
  fn.c_star = j.at("c_star").get<double>();
  fn.xi_star = j.at("xi_star").get<double>();
  return fn;
}

int cmd_solve_refs(const Shared& shared, bool uniform_flag) {
  Run run = load_run(shared);
  Manifest manifest("solve-refs", run, shared);
  const fs::path clicks_path = run.out_dir / kClicksFile;
  manifest.input("clicks", clicks_path);
  const bool uniform = uniform_flag || run.cfg.uniform;

  const double budget = run.cfg.campaign.budget;
  if (!(budget > 0.0)) throw rtbctl::ConfigError("solve-refs: budget must be > 0");

  json clicks;
  try {
    clicks = json::parse(read_file(clicks_path));
  } catch (const json::exception& e) {
    throw rtbctl::DataError(std::string("bad clicks JSON: ") + e.what());
  }

  std::optional<rtbctl::ClickFunction> aggregate;
  std::vector<rtbctl::ClickFunction> per_channel;
  for (const auto& ch : clicks.at("channels")) {
    if (ch.contains("error")) continue;
    const auto fn = fn_from_json(ch);
    if (fn.channel == rtbctl::kAllChannels) {
      aggregate = fn;
    } else {
      per_channel.push_back(fn);
    }
  }

  rtbctl::ReferencePlan plan;
  if (uniform) {
    if (!aggregate) {
      throw rtbctl::UnfittableChannelError("solve-refs: aggregate curve unavailable");
    }
    plan = rtbctl::plan_references(std::span(&*aggregate, 1), budget);
    plan.uniform = true;
    plan.uniform_xi_ref = plan.channels.front().xi_ref;
  } else {
    if (per_channel.empty()) {
      throw rtbctl::UnfittableChannelError("solve-refs: no fitted channels");
    }
    plan = rtbctl::plan_references(per_channel, budget);
    if (aggregate) {
      // Fallback reference for channels whose own fit failed.
      const auto uni = rtbctl::plan_references(std::span(&*aggregate, 1), budget);
      plan.uniform_xi_ref = uni.channels.front().xi_ref;
    }
  }

  const fs::path out = run.out_dir / kPlanFile;
  write_file(out, rtbctl::to_json_string(plan));
  manifest.output(out);
  manifest.write();
  std::cout << "solve-refs: alpha=" << plan.alpha << " -> " << out.string() << "\n";
  return 0;
}

// ---- references shared by tune/simulate ----

std::map<int, double> references_from_plan(const rtbctl::ReferencePlan& plan,
                                           const rtbctl::LogMeta& meta,
                                           std::vector<int>* fallback) {
  std::map<int, double> refs;
  for (int ch = 0; ch < meta.n_channels; ++ch) {
    bool found = false;
    if (!plan.uniform) {
      for (const auto& entry : plan.channels) {
        if (entry.fn.channel == ch) {
          refs[ch] = entry.xi_ref;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      if (!plan.uniform_xi_ref) {
        throw rtbctl::ConfigError("plan has no reference for channel " +
                                  std::to_string(ch) + " and no uniform fallback");
      }
      refs[ch] = *plan.uniform_xi_ref;
      if (fallback && !plan.uniform) fallback->push_back(ch);
    }
  }
  return refs;
}

// Applies plan references (when a plan artifact exists) and tuned gains
// (when a tuned artifact exists) on top of the configured campaign.
rtbctl::CampaignConfig effective_campaign(const Run& run, const rtbctl::LogMeta& meta,
                                          Manifest* manifest,
                                          std::vector<int>* fallback_channels) {
  rtbctl::CampaignConfig campaign = run.cfg.campaign;
  const fs::path plan_path = run.out_dir / kPlanFile;
  if (campaign.controller != rtbctl::ControllerKind::none && fs::exists(plan_path)) {
    const auto plan = rtbctl::load_reference_plan(plan_path);
    campaign.references = references_from_plan(plan, meta, fallback_channels);
    if (manifest) manifest->input("plan", plan_path);
  }
  const fs::path tuned_path = run.out_dir / kTunedFile;
  if (campaign.controller == rtbctl::ControllerKind::pid && fs::exists(tuned_path)) {
    json tuned;
    try {
      tuned = json::parse(read_file(tuned_path));
      campaign.pid.lambda_p = tuned.at("lambda_p").get<double>();
      campaign.pid.lambda_i = tuned.at("lambda_i").get<double>();
      campaign.pid.lambda_d = tuned.at("lambda_d").get<double>();
    } catch (const json::exception& e) {
      throw rtbctl::DataError(std::string("bad tuned JSON: ") + e.what());
    }
    if (manifest) manifest->input("tuned", tuned_path);
  }
  return campaign;
}

// ---- tune ----

int cmd_tune(const Shared& shared) {
  Run run = load_run(shared);
  Manifest manifest("tune", run, shared);
  manifest.input("train_log", run.train_log);
  manifest.input("model", run.out_dir / kModelFile);

  const auto raw = rtbctl::parse_log(run.train_log);
  const auto model = rtbctl::load_ctr_model(run.out_dir / kModelFile);
  const auto prepared = rtbctl::prepare(raw.records, model);
  rtbctl::CampaignConfig campaign = effective_campaign(run, raw.meta, &manifest, nullptr);
  if (campaign.controller != rtbctl::ControllerKind::pid) {
    throw rtbctl::ConfigError("tune: campaign controller must be pid");
  }

  const auto result = rtbctl::coordinate_search(run.cfg.search, prepared, campaign);

  json tuned{{"lambda_p", result.best.lambda_p},
             {"lambda_i", result.best.lambda_i},
             {"lambda_d", result.best.lambda_d},
             {"settled", result.objective.settled}};
  if (result.objective.settled) tuned["settling"] = result.objective.settling;
  const fs::path out = run.out_dir / kTunedFile;
  write_file(out, tuned.dump(2) + "\n");
  const fs::path trace = run.out_dir / kTraceFile;
  write_file(trace, rtbctl::format_trace_csv(result.trace));
  manifest.output(out);
  manifest.output(trace);
  manifest.write();
  std::cout << "tune: lambda_p=" << result.best.lambda_p
            << " lambda_i=" << result.best.lambda_i
            << (result.objective.settled
                    ? " (settles in " + std::to_string(result.objective.settling) + ")"
                    : " (unsettled)")
            << " -> " << out.string() << "\n";
  return 0;
}

// ---- simulate ----

int cmd_simulate(const Shared& shared) {
  Run run = load_run(shared);
  Manifest manifest("simulate", run, shared);
  manifest.input("test_log", run.test_log);
  manifest.input("model", run.out_dir / kModelFile);

  const auto raw = rtbctl::parse_log(run.test_log);
  const auto model = rtbctl::load_ctr_model(run.out_dir / kModelFile);
  const auto prepared = rtbctl::prepare(raw.records, model);
  std::vector<int> fallback_channels;
  const auto campaign = effective_campaign(run, raw.meta, &manifest, &fallback_channels);

  rtbctl::ReplayResult result;
  std::vector<rtbctl::RetuneEvent> retune_events;
  if (run.cfg.retune && campaign.controller == rtbctl::ControllerKind::pid) {
    auto rr = rtbctl::replay_with_online_retune(prepared, campaign, *run.cfg.retune);
    result = std::move(rr.replay);
    retune_events = std::move(rr.events);
  } else {
    result = rtbctl::replay(prepared, campaign);
  }

  const fs::path campaign_csv = run.out_dir / kCampaignCsv;
  write_file(campaign_csv, rtbctl::format_series_csv(result.campaign));
  manifest.output(campaign_csv);
  for (const auto& ch : result.channels) {
    const fs::path p =
        run.out_dir / ("series_channel_" + std::to_string(ch.channel) + ".csv");
    write_file(p, rtbctl::format_series_csv(ch.rows));
    manifest.output(p);
  }

  json report = json::parse(rtbctl::replay_report_json(result, campaign));
  report["config"] = run.raw;
  if (!fallback_channels.empty()) report["fallback_channels"] = fallback_channels;
  if (!retune_events.empty()) {
    json events = json::array();
    for (const auto& ev : retune_events) {
      events.push_back({{"round", ev.round},
                        {"lambda_p", ev.after.lambda_p},
                        {"lambda_i", ev.after.lambda_i},
                        {"improved", ev.improved}});
    }
    report["retune_events"] = events;
  }
  const fs::path report_path = run.out_dir / kReportFile;
  write_file(report_path, report.dump(2) + "\n");
  manifest.output(report_path);
  manifest.write();

  std::cout << "simulate: rounds=" << result.rounds
            << " clicks=" << result.final_counts.clicks
            << " cost=" << result.final_counts.cost
            << (result.budget_exhausted ? " (budget exhausted)" : "") << " -> "
            << report_path.string() << "\n";
  return 0;
}

// ---- report ----

std::string fmt_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return "-";
  std::ostringstream out;
  out << j.at(key);
  return out.str();
}

int cmd_report(const Shared& shared) {
  Run run = load_run(shared);
  const fs::path report_path = run.out_dir / kReportFile;
  json report;
  try {
    report = json::parse(read_file(report_path));
  } catch (const json::exception& e) {
    throw rtbctl::DataError(std::string("bad report JSON: ") + e.what());
  }

  const auto& fin = report.at("final");
  std::cout << "campaign: controller=" << report.at("controller").get<std::string>()
            << " kpi=" << report.at("kpi").get<std::string>()
            << " rounds=" << report.at("rounds") << "\n";
  std::cout << "  bids=" << fin.at("bids") << " wins=" << fin.at("wins")
            << " clicks=" << fin.at("clicks") << " cost=" << fin.at("cost")
            << " ecpc=" << fmt_opt(fin, "ecpc") << " awr=" << fmt_opt(fin, "awr")
            << "\n";
  for (const auto& ch : report.at("channels")) {
    std::cout << "channel " << ch.at("channel") << ":";
    if (ch.contains("report")) {
      const auto& r = ch.at("report");
      std::cout << " x_r=" << fmt_opt(ch, "x_r") << " rise=" << fmt_opt(r, "rise_round")
                << " settling=" << fmt_opt(r, "settling_round")
                << " overshoot%=" << r.at("overshoot_pct")
                << " rmse_ss=" << fmt_opt(r, "rmse_ss")
                << " sd_ss=" << fmt_opt(r, "sd_ss");
    } else {
      std::cout << " uncontrolled";
    }
    const auto& cf = ch.at("final");
    std::cout << " clicks=" << cf.at("clicks") << " cost=" << cf.at("cost") << "\n";
  }
  return 0;
}

// ---- pipeline ----

struct PipelineFlags {
  bool skip_gen = false;
  bool skip_train = false;
  bool skip_sweep = false;
  bool skip_refs = false;
  bool skip_tune = false;
  bool uniform = false;
  std::string controller;  // override, e.g. "none"
};

int cmd_pipeline(const Shared& shared, const PipelineFlags& flags) {
  // Stage failures surface with the stage name attached.
  const auto stage = [](const char* name, auto&& body) {
    try {
      body();
    } catch (const rtbctl::Error&) {
      std::cerr << "pipeline: stage " << name << " failed\n";
      throw;
    }
  };

  Shared local = shared;
  {
    // Honor a controller override before any stage decides to skip.
    Run probe = load_run(shared);
    rtbctl::ControllerKind controller = probe.cfg.campaign.controller;
    if (!flags.controller.empty()) {
      controller = rtbctl::controller_from_string(flags.controller);
      // Rewrite the config copy the stages will read? Config files stay
      // untouched; stages re-read the document, so the override is applied
      // through a patched temp config.
    }
    const bool budgeted = probe.cfg.campaign.budget > 0.0;

    fs::path config_to_use = probe.config_path;
    if (!flags.controller.empty() || flags.uniform) {
      json patched = probe.raw;
      if (!flags.controller.empty()) {
        patched["campaign"]["controller"] = flags.controller;
      }
      if (flags.uniform) patched["uniform"] = true;
      // Resolve paths against the original config location before moving the
      // document into the out-dir.
      json paths = patched.contains("paths") ? patched["paths"] : json::object();
      const auto absolutize = [&](const char* key, const fs::path& resolved) {
        if (!resolved.empty()) paths[key] = fs::absolute(resolved).string();
      };
      absolutize("train_log", probe.train_log);
      absolutize("test_log", probe.test_log);
      absolutize("out_dir", probe.out_dir);
      patched["paths"] = paths;
      config_to_use = probe.out_dir / "pipeline_config.json";
      write_file(config_to_use, patched.dump(2) + "\n");
    }
    local.config = config_to_use.string();

    Run run = load_run(local);
    const bool has_gen = run.cfg.gen_train || run.cfg.gen_test;
    const bool tune_applicable = controller == rtbctl::ControllerKind::pid;
    const bool refs_applicable = controller != rtbctl::ControllerKind::none && budgeted;

    if (!flags.skip_gen && has_gen) stage("gen", [&] { cmd_gen(local); });
    if (!flags.skip_train) stage("train-ctr", [&] { cmd_train_ctr(local); });
    if (!flags.skip_sweep && refs_applicable) {
      stage("sweep", [&] { cmd_sweep(local); });
      stage("fit-clicks", [&] { cmd_fit_clicks(local); });
    }
    if (!flags.skip_refs && refs_applicable) {
      stage("solve-refs", [&] { cmd_solve_refs(local, flags.uniform); });
    }
    if (!flags.skip_tune && tune_applicable) stage("tune", [&] { cmd_tune(local); });
    stage("simulate", [&] { cmd_simulate(local); });

    Manifest manifest("pipeline", run, local);
    manifest.input("config", run.config_path);
    for (const char* name : {kModelFile, kCurvesFile, kClicksFile, kPlanFile,
                             kTunedFile, kTraceFile, kCampaignCsv, kReportFile}) {
      const fs::path p = run.out_dir / name;
      if (fs::exists(p)) manifest.output(p);
    }
    manifest.write();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedback-control bid replay toolkit"};
  app.require_subcommand(1);

  Shared shared;
  PipelineFlags pflags;

  auto* gen = app.add_subcommand("gen", "generate synthetic bid logs");
  add_shared(gen, shared);
  auto* train = app.add_subcommand("train-ctr", "train the CTR model");
  add_shared(train, shared);
  auto* sweep = app.add_subcommand("sweep", "trace per-channel click curves");
  add_shared(sweep, shared);
  auto* fit = app.add_subcommand("fit-clicks", "fit click functions to curves");
  add_shared(fit, shared);
  auto* refs = app.add_subcommand("solve-refs", "solve optimal reference eCPCs");
  add_shared(refs, shared);
  bool refs_uniform = false;
  refs->add_flag("--uniform", refs_uniform, "single campaign-wide reference");
  auto* tune = app.add_subcommand("tune", "search PID gains on the train log");
  add_shared(tune, shared);
  auto* simulate = app.add_subcommand("simulate", "replay the test log");
  add_shared(simulate, shared);
  auto* report = app.add_subcommand("report", "print a run summary");
  add_shared(report, shared);
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  add_shared(pipeline, shared);
  pipeline->add_flag("--skip-gen", pflags.skip_gen, "reuse existing logs");
  pipeline->add_flag("--skip-train-ctr", pflags.skip_train, "reuse the model artifact");
  pipeline->add_flag("--skip-sweep", pflags.skip_sweep, "reuse curve artifacts");
  pipeline->add_flag("--skip-refs", pflags.skip_refs, "reuse the plan artifact");
  pipeline->add_flag("--skip-tune", pflags.skip_tune, "reuse tuned gains");
  pipeline->add_flag("--uniform", pflags.uniform, "plan one campaign-wide reference");
  pipeline->add_option("--controller", pflags.controller,
                       "override the campaign controller (pid, wl, none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const char* name = "rtbctl";
  try {
    if (gen->parsed()) {
      name = "gen";
      return cmd_gen(shared);
    }
    if (train->parsed()) {
      name = "train-ctr";
      return cmd_train_ctr(shared);
    }
    if (sweep->parsed()) {
      name = "sweep";
      return cmd_sweep(shared);
    }
    if (fit->parsed()) {
      name = "fit-clicks";
      return cmd_fit_clicks(shared);
    }
    if (refs->parsed()) {
      name = "solve-refs";
      return cmd_solve_refs(shared, refs_uniform);
    }
    if (tune->parsed()) {
      name = "tune";
      return cmd_tune(shared);
    }
    if (simulate->parsed()) {
      name = "simulate";
      return cmd_simulate(shared);
    }
    if (report->parsed()) {
      name = "report";
      return cmd_report(shared);
    }
    if (pipeline->parsed()) {
      name = "pipeline";
      return cmd_pipeline(shared, pflags);
    }
  } catch (const rtbctl::ConfigError& e) {
    std::cerr << name << ": config error: " << e.what() << "\n";
    return 1;
  } catch (const rtbctl::NumericError& e) {
    std::cerr << name << ": numeric error: " << e.what() << "\n";
    return 3;
  } catch (const rtbctl::DataError& e) {
    std::cerr << name << ": data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
