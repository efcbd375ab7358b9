#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtbctl/bidder.hpp"

namespace rtbctl {

/// Concave click-response model for one channel:
///   clicks(xi) = c_star * a * (xi / xi_star)^b        with 0 < b < 1.
/// (xi_star, c_star) is the observed operating point, so a is the model's
/// value there relative to the observation.
struct ClickFunction {
  int channel = 0;
  double c_star = 0.0;   // clicks at the observed operating point
  double xi_star = 0.0;  // observed eCPC, micro-units
  double a = 1.0;
  double b = 0.5;

  double clicks_at(double xi) const;
  double spend_at(double xi) const;  // xi * clicks_at(xi)
  /// Coefficient of the budget-balance expansion; groups everything except
  /// the shared multiplier so allocation reduces to one scalar equation.
  double delta() const;
};

struct EcpcPoint {
  double xi = 0.0;      // achieved eCPC
  double clicks = 0.0;  // achieved clicks
};

struct FitResult {
  ClickFunction fn;
  bool b_clipped = false;  // exponent hit the (0,1) wall and was refit
};

/// Log-space least squares over points with positive clicks and eCPC.
/// Throws UnfittableChannelError when fewer than two usable points remain
/// or the xi values are all identical.
FitResult fit_click_function(std::span<const EcpcPoint> points, double c_star,
                             double xi_star, int channel = 0);

/// Bid-scale multipliers for tracing each channel's click response: powers
/// of two from 2^-6 through 2^6.
std::vector<double> default_multipliers();

/// All-channel pseudo-channel id for sweeping or summarising the campaign as
/// a whole (the uniform-reference baseline).
inline constexpr int kAllChannels = -1;

/// Replays one channel of the log uncontrolled and unbudgeted at
/// b0 * multiplier for each multiplier, recording achieved (eCPC, clicks).
/// Points with zero clicks are dropped. Throws UnfittableChannelError when
/// nothing usable survives. channel may be kAllChannels.
std::vector<EcpcPoint> sweep_channel(const PreparedLog& log, int channel, double b0,
                                     std::span<const double> multipliers);

/// Observed operating point of a channel in the raw log: total clicks and
/// overall eCPC at logged winning prices. channel may be kAllChannels.
std::optional<EcpcPoint> channel_history(std::span<const AuctionRecord> records,
                                         int channel);

struct AlphaSolution {
  double alpha = 0.0;
  double u = 0.0;  // 1 / alpha, the bisection variable
  std::vector<double> xi_refs;  // per channel, aligned with the input order
  double spend = 0.0;           // model-implied spend at the solution
  double clicks = 0.0;          // model-implied clicks at the solution
};

/// Solves sum_i delta_i * u^(b_i + 1) = budget for u by bisection; the
/// optimal per-channel reference eCPC is then u * b_i / (b_i + 1). Throws
/// ConfigError on empty channels or non-positive budget, NumericError if
/// the bracket cannot be established.
AlphaSolution solve_alpha(std::span<const ClickFunction> fns, double budget);

struct ChannelPlan {
  ClickFunction fn;
  double xi_ref = 0.0;
};

struct ReferencePlan {
  double alpha = 0.0;
  double budget = 0.0;
  std::vector<ChannelPlan> channels;
  /// True when the plan carries one campaign-wide reference instead of
  /// per-channel ones.
  bool uniform = false;
  /// Reference from the all-channel aggregate fit; the fallback for channels
  /// missing from `channels`.
  std::optional<double> uniform_xi_ref;
};

ReferencePlan plan_references(std::span<const ClickFunction> fns, double budget);

std::string to_json_string(const ReferencePlan& plan);
ReferencePlan reference_plan_from_json_string(const std::string& text);
void save_reference_plan(const std::filesystem::path& path, const ReferencePlan& plan);
ReferencePlan load_reference_plan(const std::filesystem::path& path);

}  // namespace rtbctl
