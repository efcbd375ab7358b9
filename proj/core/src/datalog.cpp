#include "rtbctl/datalog.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "rtbctl/errors.hpp"
#include "rtbctl/numeric.hpp"

namespace rtbctl {

namespace {

template <typename T>
T parse_int(std::string_view field, const char* name, std::size_t line) {
  T value{};
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(std::string("bad ") + name + " '" + std::string(field) + "'", line);
  }
  return value;
}

AuctionRecord parse_line(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, 5> fields;
  std::size_t n_fields = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    const std::string_view field =
        tab == std::string_view::npos ? line.substr(start) : line.substr(start, tab - start);
    if (n_fields == fields.size()) {
      throw ParseError("expected 5 tab-separated fields", line_no);
    }
    fields[n_fields++] = field;
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (n_fields != fields.size()) {
    throw ParseError("expected 5 tab-separated fields", line_no);
  }

  AuctionRecord rec;
  rec.ts = parse_int<std::int64_t>(fields[0], "ts", line_no);
  rec.channel_id = parse_int<int>(fields[1], "channel_id", line_no);
  if (rec.channel_id < 0) throw ParseError("negative channel_id", line_no);
  rec.winning_price = parse_int<std::int64_t>(fields[2], "winning_price", line_no);
  if (rec.winning_price < 0) throw ParseError("negative winning_price", line_no);
  rec.click = parse_int<int>(fields[3], "click", line_no);
  if (rec.click != 0 && rec.click != 1) throw ParseError("click not in {0,1}", line_no);

  const std::string_view feats = fields[4];
  if (!feats.empty()) {
    std::size_t pos = 0;
    int prev = -1;
    while (true) {
      const std::size_t comma = feats.find(',', pos);
      const std::string_view item = comma == std::string_view::npos
                                        ? feats.substr(pos)
                                        : feats.substr(pos, comma - pos);
      const int idx = parse_int<int>(item, "feature index", line_no);
      if (idx < 0) throw ParseError("negative feature index", line_no);
      if (idx <= prev) throw ParseError("features not strictly ascending", line_no);
      rec.features.push_back(idx);
      prev = idx;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  return rec;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_channels < 1) throw ConfigError("n_channels must be >= 1");
  if (cfg.price_mu.size() != static_cast<std::size_t>(cfg.n_channels)) {
    throw ConfigError("price_mu must have one entry per channel");
  }
  if (cfg.price_sigma.size() != static_cast<std::size_t>(cfg.n_channels)) {
    throw ConfigError("price_sigma must have one entry per channel");
  }
  for (double s : cfg.price_sigma) {
    if (!(s > 0.0)) throw ConfigError("price_sigma entries must be > 0");
  }
  if (cfg.n_features < 1) throw ConfigError("n_features must be >= 1");
  if (cfg.ctr_weights.size() != static_cast<std::size_t>(cfg.n_features)) {
    throw ConfigError("ctr_weights must have one entry per feature");
  }
  if (cfg.sparsity_k < 1 || cfg.sparsity_k > cfg.n_features) {
    throw ConfigError("sparsity_k must be in [1, n_features]");
  }
  if (cfg.duration_seconds < 0) throw ConfigError("duration_seconds must be >= 0");
}

ParsedLog parse_log_text(std::string_view text) {
  ParsedLog out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      // A trailing newline is fine; a blank line inside the file is not.
      if (pos >= text.size()) continue;
      throw ParseError("blank line", line_no);
    }
    AuctionRecord rec = parse_line(line, line_no);
    if (!out.records.empty() && rec.ts < out.records.back().ts) {
      throw DataError("line " + std::to_string(line_no) + ": ts regression (" +
                      std::to_string(rec.ts) + " after " +
                      std::to_string(out.records.back().ts) + ")");
    }
    out.records.push_back(std::move(rec));
  }
  out.meta = scan_meta(out.records);
  return out;
}

ParsedLog parse_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open log file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_log_text(buf.str());
}

LogMeta scan_meta(std::span<const AuctionRecord> records) {
  LogMeta meta;
  if (records.empty()) return meta;
  meta.empty = false;
  meta.ts_min = records.front().ts;
  meta.ts_max = records.back().ts;
  int max_channel = 0;
  int max_feature = -1;
  for (const auto& r : records) {
    max_channel = std::max(max_channel, r.channel_id);
    if (!r.features.empty()) max_feature = std::max(max_feature, r.features.back());
  }
  meta.n_channels = max_channel + 1;
  meta.n_features = max_feature + 1;
  return meta;
}

std::vector<AuctionRecord> generate_log(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<AuctionRecord> out;
  out.reserve(cfg.n_records);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> channel_dist(0, cfg.n_channels - 1);
  std::uniform_int_distribution<int> feature_dist(0, cfg.n_features - 1);

  std::vector<int> active;
  for (std::size_t i = 0; i < cfg.n_records; ++i) {
    AuctionRecord rec;
    rec.ts = cfg.ts_start +
             static_cast<std::int64_t>(i * static_cast<unsigned long long>(cfg.duration_seconds) /
                                       cfg.n_records);
    rec.channel_id = channel_dist(rng);

    std::lognormal_distribution<double> price_dist(cfg.price_mu[rec.channel_id],
                                                   cfg.price_sigma[rec.channel_id]);
    rec.winning_price = std::llround(price_dist(rng));
    if (rec.winning_price < 0) rec.winning_price = 0;

    active.clear();
    if (cfg.sparsity_k * 2 >= cfg.n_features) {
      // Dense regime: partial shuffle beats rejection sampling.
      std::vector<int> all(static_cast<std::size_t>(cfg.n_features));
      std::iota(all.begin(), all.end(), 0);
      for (int j = 0; j < cfg.sparsity_k; ++j) {
        std::uniform_int_distribution<int> pick(j, cfg.n_features - 1);
        std::swap(all[j], all[pick(rng)]);
        active.push_back(all[j]);
      }
    } else {
      std::unordered_set<int> seen;
      while (static_cast<int>(active.size()) < cfg.sparsity_k) {
        const int f = feature_dist(rng);
        if (seen.insert(f).second) active.push_back(f);
      }
    }
    std::sort(active.begin(), active.end());
    rec.features = active;

    double z = cfg.ctr_bias;
    for (int f : active) z += cfg.ctr_weights[f];
    std::bernoulli_distribution click_dist(sigmoid(z));
    rec.click = click_dist(rng) ? 1 : 0;

    out.push_back(std::move(rec));
  }
  return out;
}

std::string format_log(std::span<const AuctionRecord> records) {
  std::string out;
  out.reserve(records.size() * 24);
  for (const auto& r : records) {
    out += std::to_string(r.ts);
    out += '\t';
    out += std::to_string(r.channel_id);
    out += '\t';
    out += std::to_string(r.winning_price);
    out += '\t';
    out += std::to_string(r.click);
    out += '\t';
    for (std::size_t i = 0; i < r.features.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(r.features[i]);
    }
    out += '\n';
  }
  return out;
}

void write_log(const std::filesystem::path& path, std::span<const AuctionRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write log file: " + path.string());
  out << format_log(records);
  if (!out) throw DataError("failed writing log file: " + path.string());
}

}  // namespace rtbctl
