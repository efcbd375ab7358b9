#include "rtbctl/refopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rtbctl/errors.hpp"

namespace rtbctl {

namespace {

void validate_fn(const ClickFunction& fn) {
  if (!(fn.c_star > 0.0) || !(fn.xi_star > 0.0) || !(fn.a > 0.0) || !(fn.b > 0.0)) {
    throw ConfigError("click function for channel " + std::to_string(fn.channel) +
                      " needs positive c_star, xi_star, a, b");
  }
}

}  // namespace

double ClickFunction::clicks_at(double xi) const {
  return c_star * a * std::pow(xi / xi_star, b);
}

double ClickFunction::spend_at(double xi) const { return xi * clicks_at(xi); }

double ClickFunction::delta() const {
  return c_star * a / std::pow(xi_star, b) * std::pow(b / (b + 1.0), b + 1.0);
}

FitResult fit_click_function(std::span<const EcpcPoint> points, double c_star,
                             double xi_star, int channel) {
  if (!(c_star > 0.0) || !(xi_star > 0.0)) {
    throw ConfigError("fit needs positive c_star and xi_star");
  }
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.clicks > 0.0 && p.xi > 0.0) {
      xs.push_back(std::log(p.xi / xi_star));
      ys.push_back(std::log(p.clicks / c_star));
    }
  }
  const std::size_t n = xs.size();
  if (n < 2) {
    throw UnfittableChannelError("channel " + std::to_string(channel) +
                                 ": fewer than two usable sweep points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    throw UnfittableChannelError("channel " + std::to_string(channel) +
                                 ": all sweep points share one eCPC");
  }

  FitResult result;
  double slope = sxy / sxx;
  if (slope <= 0.0) {
    // The concave model needs a rising curve; pin the exponent just above
    // zero and refit the level.
    slope = 1e-6;
    result.b_clipped = true;
  }
  const double intercept = my - slope * mx;

  result.fn.channel = channel;
  result.fn.c_star = c_star;
  result.fn.xi_star = xi_star;
  result.fn.a = std::exp(intercept);
  result.fn.b = slope;
  validate_fn(result.fn);
  return result;
}

std::vector<double> default_multipliers() {
  std::vector<double> out;
  for (int j = -6; j <= 6; ++j) out.push_back(std::ldexp(1.0, j));
  return out;
}

std::vector<EcpcPoint> sweep_channel(const PreparedLog& log, int channel, double b0,
                                     std::span<const double> multipliers) {
  if (!(b0 > 0.0)) throw ConfigError("sweep needs b0 > 0");
  std::vector<EcpcPoint> points;
  for (double m : multipliers) {
    if (!(m > 0.0)) continue;
    std::int64_t cost = 0;
    std::int64_t clicks = 0;
    for (const auto& r : log.records) {
      if (channel != kAllChannels && r.channel_id != channel) continue;
      const std::int64_t bid = final_bid_price(b0 * m * r.ctr_ratio);
      if (bid > r.winning_price) {
        cost += r.winning_price;
        clicks += r.click;
      }
    }
    if (clicks > 0) {
      points.push_back({static_cast<double>(cost) / static_cast<double>(clicks),
                        static_cast<double>(clicks)});
    }
  }
  if (points.empty()) {
    throw UnfittableChannelError("channel " + std::to_string(channel) +
                                 ": no sweep multiplier produced a click");
  }
  return points;
}

std::optional<EcpcPoint> channel_history(std::span<const AuctionRecord> records,
                                         int channel) {
  std::int64_t cost = 0;
  std::int64_t clicks = 0;
  for (const auto& r : records) {
    if (channel != kAllChannels && r.channel_id != channel) continue;
    cost += r.winning_price;
    clicks += r.click;
  }
  if (clicks == 0) return std::nullopt;
  return EcpcPoint{static_cast<double>(cost) / static_cast<double>(clicks),
                   static_cast<double>(clicks)};
}

AlphaSolution solve_alpha(std::span<const ClickFunction> fns, double budget) {
  if (fns.empty()) throw ConfigError("solve_alpha needs at least one channel");
  if (!(budget > 0.0)) throw ConfigError("solve_alpha needs budget > 0");
  for (const auto& fn : fns) validate_fn(fn);

  // residual(u) = sum_i delta_i u^(b_i+1) - budget, strictly increasing.
  const auto residual = [&](double u) {
    double total = 0.0;
    for (const auto& fn : fns) total += fn.delta() * std::pow(u, fn.b + 1.0);
    return total - budget;
  };

  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000) throw NumericError("solve_alpha bracket did not close");
  }

  const double tol = 1e-9 * budget;
  double mid = hi;
  for (int it = 0; it < 500; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) <= tol) break;
    if (r < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (std::abs(residual(mid)) > tol) {
    throw NumericError("solve_alpha failed to reach tolerance");
  }

  AlphaSolution sol;
  sol.u = mid;
  sol.alpha = 1.0 / mid;
  for (const auto& fn : fns) {
    const double xi = mid * fn.b / (fn.b + 1.0);
    sol.xi_refs.push_back(xi);
    sol.spend += fn.spend_at(xi);
    sol.clicks += fn.clicks_at(xi);
  }
  return sol;
}

ReferencePlan plan_references(std::span<const ClickFunction> fns, double budget) {
  const AlphaSolution sol = solve_alpha(fns, budget);
  ReferencePlan plan;
  plan.alpha = sol.alpha;
  plan.budget = budget;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    plan.channels.push_back({fns[i], sol.xi_refs[i]});
  }
  return plan;
}

std::string to_json_string(const ReferencePlan& plan) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : plan.channels) {
    channels.push_back({{"id", ch.fn.channel},
                        {"a", ch.fn.a},
                        {"b", ch.fn.b},
                        {"c_star", ch.fn.c_star},
                        {"xi_star", ch.fn.xi_star},
                        {"delta", ch.fn.delta()},
                        {"xi_ref", ch.xi_ref}});
  }
  nlohmann::json j{{"alpha", plan.alpha}, {"budget", plan.budget}, {"channels", channels}};
  j["uniform"] = plan.uniform;
  if (plan.uniform_xi_ref) j["uniform_xi_ref"] = *plan.uniform_xi_ref;
  return j.dump(2) + "\n";
}

ReferencePlan reference_plan_from_json_string(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ReferencePlan plan;
    plan.alpha = j.at("alpha").get<double>();
    plan.budget = j.at("budget").get<double>();
    for (const auto& ch : j.at("channels")) {
      ChannelPlan cp;
      cp.fn.channel = ch.at("id").get<int>();
      cp.fn.a = ch.at("a").get<double>();
      cp.fn.b = ch.at("b").get<double>();
      cp.fn.c_star = ch.at("c_star").get<double>();
      cp.fn.xi_star = ch.at("xi_star").get<double>();
      cp.xi_ref = ch.at("xi_ref").get<double>();
      plan.channels.push_back(cp);
    }
    if (j.contains("uniform")) plan.uniform = j.at("uniform").get<bool>();
    if (j.contains("uniform_xi_ref")) plan.uniform_xi_ref = j.at("uniform_xi_ref").get<double>();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad reference plan JSON: ") + e.what());
  }
}

void save_reference_plan(const std::filesystem::path& path, const ReferencePlan& plan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write reference plan: " + path.string());
  out << to_json_string(plan);
}

ReferencePlan load_reference_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open reference plan: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return reference_plan_from_json_string(buf.str());
}

}  // namespace rtbctl
