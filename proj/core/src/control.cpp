#include "rtbctl/control.hpp"

#include <cmath>

#include <json.hpp>

#include "rtbctl/errors.hpp"

namespace rtbctl {

double pid_update(PidState& state, const PidParams& params, double x_r, double x,
                  double dt, std::optional<AntiWindup> aw) {
  if (!std::isfinite(x)) throw NumericError("PID measurement is not finite");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");

  const double e = x_r - x;
  const double derivative = state.prev_error ? (e - *state.prev_error) / dt : 0.0;
  const double integral_next = state.integral + e * dt;
  const double phi = params.lambda_p * e + params.lambda_i * integral_next +
                     params.lambda_d * derivative;
  if (!aw || (phi >= aw->bounds.lo && phi <= aw->bounds.hi)) {
    state.integral = integral_next;
  }
  // else: the actuator would saturate, so this round's error is not
  // accumulated; the emitted signal is unchanged (clamping is actuate's job).
  state.prev_error = e;
  state.phi = phi;
  return phi;
}

double wl_update(WlState& state, double x_r, double x) {
  if (!std::isfinite(x)) throw NumericError("waterlevel measurement is not finite");
  if (!(state.gamma > 0.0)) throw ConfigError("waterlevel gamma must be > 0");
  state.phi += state.gamma * (x_r - x);
  return state.phi;
}

std::optional<double> dynamic_reference(double x_r, double x, double budget,
                                        double spend) {
  if (!std::isfinite(x_r) || !std::isfinite(x) || !std::isfinite(budget) ||
      !std::isfinite(spend)) {
    throw ConfigError("dynamic reference inputs must be finite");
  }
  if (spend < 0.0 || spend >= budget) {
    throw ConfigError("dynamic reference needs 0 <= spend < budget");
  }
  if (x == x_r) return x_r;
  if (x <= 0.0) return std::nullopt;
  const double denom = budget * x - spend * x_r;
  if (denom <= 0.0) return std::nullopt;  // target unreachable within budget
  return (budget - spend) * x_r * x / denom;
}

std::string to_json_string(const PidState& state) {
  nlohmann::json j{{"integral", state.integral}, {"phi", state.phi}};
  j["prev_error"] = state.prev_error ? nlohmann::json(*state.prev_error)
                                     : nlohmann::json(nullptr);
  return j.dump();
}

PidState pid_state_from_json_string(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PidState state;
    state.integral = j.at("integral").get<double>();
    state.phi = j.at("phi").get<double>();
    if (!j.at("prev_error").is_null()) state.prev_error = j.at("prev_error").get<double>();
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad PID state JSON: ") + e.what());
  }
}

std::string to_json_string(const WlState& state) {
  return nlohmann::json{{"gamma", state.gamma}, {"phi", state.phi}}.dump();
}

WlState wl_state_from_json_string(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return {j.at("gamma").get<double>(), j.at("phi").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad waterlevel state JSON: ") + e.what());
  }
}

}  // namespace rtbctl
