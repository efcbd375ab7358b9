#include "rtbctl/ctr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rtbctl/errors.hpp"
#include "rtbctl/numeric.hpp"

namespace rtbctl {

double CtrModel::predict(std::span<const int> features) const {
  double z = bias;
  for (int f : features) {
    auto it = weights.find(f);
    if (it != weights.end()) z += it->second;
  }
  return sigmoid(z);
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (cfg.l2 < 0.0) throw ConfigError("l2 must be >= 0");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
}

CtrModel train_ctr(std::span<const AuctionRecord> records, const TrainConfig& cfg) {
  validate(cfg);
  if (records.empty()) throw DataError("empty training set");
  std::int64_t clicks = 0;
  for (const auto& r : records) clicks += r.click;
  if (clicks == 0 || clicks == static_cast<std::int64_t>(records.size())) {
    throw DataError("degenerate labels: training set needs both classes");
  }

  CtrModel model;
  model.theta0 = static_cast<double>(clicks) / static_cast<double>(records.size());

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& r = records[idx];
      double z = model.bias;
      for (int f : r.features) {
        auto it = model.weights.find(f);
        if (it != model.weights.end()) z += it->second;
      }
      const double g = sigmoid_raw(z) - static_cast<double>(r.click);
      model.bias -= cfg.learning_rate * g;
      for (int f : r.features) {
        double& w = model.weights[f];
        w -= cfg.learning_rate * (g + cfg.l2 * w);
      }
    }
  }
  return model;
}

double log_loss(const CtrModel& model, std::span<const AuctionRecord> records) {
  if (records.empty()) throw DataError("empty evaluation set");
  double total = 0.0;
  for (const auto& r : records) {
    const double p = model.predict(r.features);
    total -= r.click ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(records.size());
}

double log_loss_dense(std::span<const double> dense_weights,
                      std::span<const int> features, int label) {
  double z = dense_weights[0];
  for (int f : features) z += dense_weights[static_cast<std::size_t>(f) + 1];
  const double p = sigmoid(z);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

std::vector<double> log_loss_gradient(std::span<const double> dense_weights,
                                      std::span<const int> features, int label,
                                      int n_features) {
  double z = dense_weights[0];
  for (int f : features) z += dense_weights[static_cast<std::size_t>(f) + 1];
  const double g = sigmoid_raw(z) - static_cast<double>(label);
  std::vector<double> grad(static_cast<std::size_t>(n_features) + 1, 0.0);
  grad[0] = g;
  for (int f : features) grad[static_cast<std::size_t>(f) + 1] = g;
  return grad;
}

std::string to_json_string(const CtrModel& model) {
  nlohmann::json weights = nlohmann::json::object();
  std::vector<int> keys;
  keys.reserve(model.weights.size());
  for (const auto& [k, _] : model.weights) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (int k : keys) weights[std::to_string(k)] = model.weights.at(k);
  nlohmann::json j{{"bias", model.bias}, {"theta0", model.theta0}, {"weights", weights}};
  return j.dump(2) + "\n";
}

CtrModel ctr_model_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad CTR model JSON: ") + e.what());
  }
  CtrModel model;
  try {
    model.bias = j.at("bias").get<double>();
    model.theta0 = j.at("theta0").get<double>();
    for (const auto& [key, value] : j.at("weights").items()) {
      model.weights[std::stoi(key)] = value.get<double>();
    }
  } catch (const std::exception& e) {
    throw DataError(std::string("bad CTR model JSON: ") + e.what());
  }
  if (!(model.theta0 > 0.0 && model.theta0 < 1.0)) {
    throw DataError("CTR model theta0 must lie in (0,1)");
  }
  return model;
}

void save_ctr_model(const std::filesystem::path& path, const CtrModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CTR model: " + path.string());
  out << to_json_string(model);
}

CtrModel load_ctr_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CTR model: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ctr_model_from_json_string(buf.str());
}

}  // namespace rtbctl
