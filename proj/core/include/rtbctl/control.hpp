#pragma once

#include <optional>
#include <string>

#include "rtbctl/bidder.hpp"

namespace rtbctl {

struct PidParams {
  double lambda_p = 0.0;
  double lambda_i = 0.0;
  double lambda_d = 1e-5;
};

struct PidState {
  double integral = 0.0;
  std::optional<double> prev_error;  // empty before the first update
  double phi = 0.0;
};

struct AntiWindup {
  ActuatorBounds bounds;
};

/// One PID step on error e = x_r - x. The derivative term is zero on the
/// first update. The returned phi is always the raw control signal; with
/// anti-windup, the integral simply does not accumulate on steps whose
/// output lies outside the actuator bounds (the actuator clamps anyway).
/// Throws NumericError on non-finite x.
double pid_update(PidState& state, const PidParams& params, double x_r, double x,
                  double dt, std::optional<AntiWindup> aw = std::nullopt);

struct WlState {
  double gamma = 0.0;
  double phi = 0.0;
};

/// Waterlevel step: phi += gamma * (x_r - x).
double wl_update(WlState& state, double x_r, double x);

/// Budget-aware reference reshaping: given spend s of budget B at measured
/// KPI x, returns the reference for the remaining budget so the overall
/// campaign still averages to x_r. Empty when the remaining-traffic balance
/// has no positive solution (x_r no longer reachable).
std::optional<double> dynamic_reference(double x_r, double x, double budget,
                                        double spend);

std::string to_json_string(const PidState& state);
PidState pid_state_from_json_string(const std::string& text);
std::string to_json_string(const WlState& state);
WlState wl_state_from_json_string(const std::string& text);

}  // namespace rtbctl
