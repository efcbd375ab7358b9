#pragma once

#include <algorithm>
#include <cmath>

namespace rtbctl {

// Probabilities are kept strictly inside (0,1) so that log-loss and
// eCPC-style ratios stay finite.
inline constexpr double kProbEps = 1e-12;

/// Numerically stable logistic function, clamped to (kProbEps, 1-kProbEps).
inline double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

/// Unclamped logistic function, for gradients.
inline double sigmoid_raw(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Inverse of the logistic function.
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace rtbctl
