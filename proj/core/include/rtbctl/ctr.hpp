#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtbctl/datalog.hpp"

namespace rtbctl {

/// Sparse logistic-regression click model. Weights are stored only for
/// features seen during training; `theta0` is the average CTR of the
/// training data and serves as the bidder's reference click probability.
struct CtrModel {
  std::unordered_map<int, double> weights;
  double bias = 0.0;
  double theta0 = 0.0;

  /// sigmoid(bias + sum of active weights), clamped away from {0,1}.
  double predict(std::span<const int> features) const;
};

struct TrainConfig {
  double learning_rate = 0.01;  // > 0
  double l2 = 0.0;              // >= 0
  int epochs = 1;               // >= 0; zero epochs yields the prior-only model
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// SGD with per-example L2 on active coordinates. Throws DataError when the
/// training labels are degenerate (all clicks or none).
CtrModel train_ctr(std::span<const AuctionRecord> records, const TrainConfig& cfg);

/// Mean negative log-likelihood of the model on `records`.
double log_loss(const CtrModel& model, std::span<const AuctionRecord> records);

/// Single-example log loss at a dense weight vector laid out as
/// [bias, w_0, ..., w_{n-1}]. Counterpart of log_loss_gradient for
/// finite-difference checks.
double log_loss_dense(std::span<const double> dense_weights,
                      std::span<const int> features, int label);

/// Gradient of the single-example log loss at a dense weight vector laid out
/// as [bias, w_0, ..., w_{n-1}]. Exposed for gradient checks.
std::vector<double> log_loss_gradient(std::span<const double> dense_weights,
                                      std::span<const int> features, int label,
                                      int n_features);

std::string to_json_string(const CtrModel& model);
CtrModel ctr_model_from_json_string(const std::string& text);
void save_ctr_model(const std::filesystem::path& path, const CtrModel& model);
CtrModel load_ctr_model(const std::filesystem::path& path);

}  // namespace rtbctl
