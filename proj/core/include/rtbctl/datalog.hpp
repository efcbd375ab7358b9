#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtbctl {

/// One logged bid opportunity: the auction features, the price that had to
/// be beaten to win, and the observed click outcome.
struct AuctionRecord {
  std::int64_t ts = 0;             // seconds since epoch
  int channel_id = 0;              // ad exchange / channel index
  std::int64_t winning_price = 0;  // micro-units per impression
  int click = 0;                   // {0,1}
  std::vector<int> features;      // strictly ascending feature indices

  bool operator==(const AuctionRecord&) const = default;
};

/// Shape summary of a log: channel and feature dimensions plus time span.
struct LogMeta {
  int n_channels = 0;
  int n_features = 0;
  std::int64_t ts_min = 0;  // undefined when empty
  std::int64_t ts_max = 0;
  bool empty = true;
};

/// Synthetic-log generator settings. Market prices are per-channel
/// log-normal; clicks are Bernoulli under a ground-truth logistic model.
struct SynthConfig {
  std::size_t n_records = 0;
  int n_channels = 1;
  std::vector<double> price_mu;     // log of micro-unit price, one per channel
  std::vector<double> price_sigma;  // one per channel, > 0
  int n_features = 1;
  std::vector<double> ctr_weights;  // ground truth, size n_features
  double ctr_bias = 0.0;
  int sparsity_k = 1;  // active features per record, 1..n_features
  std::int64_t ts_start = 0;
  // Records are spread uniformly over [ts_start, ts_start + duration_seconds),
  // so fixed-length rounds see predictable record counts.
  std::int64_t duration_seconds = 0;
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the first invalid field.
void validate(const SynthConfig& cfg);

struct ParsedLog {
  std::vector<AuctionRecord> records;
  LogMeta meta;
};

/// Parses a TSV bid log (`ts  channel  price  click  features`). Throws
/// ParseError with the offending line number on malformed input and
/// DataError when timestamps regress.
ParsedLog parse_log(const std::filesystem::path& path);
ParsedLog parse_log_text(std::string_view text);

/// Recomputes a LogMeta from records already in memory.
LogMeta scan_meta(std::span<const AuctionRecord> records);

/// Deterministic given cfg.seed.
std::vector<AuctionRecord> generate_log(const SynthConfig& cfg);

/// Writes the TSV wire format; inverse of parse_log.
void write_log(const std::filesystem::path& path, std::span<const AuctionRecord> records);
std::string format_log(std::span<const AuctionRecord> records);

}  // namespace rtbctl
