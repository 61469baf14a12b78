#pragma once

// One-vs-rest linear models trained by full-batch (sub)gradient descent.

#include <cmath>

#include "lfgen/ml/classifier.hpp"

namespace lfgen::ml {

struct LinearOptions {
  double l2 = 1e-3;
  std::size_t epochs = 300;
  double learning_rate = 0.1;
};

enum class LinearLoss { logistic, hinge };

class LinearModel final : public Classifier {
 public:
  LinearModel() = default;

  static LinearModel fit(const TrainingSet& data, LinearLoss loss, LinearOptions options = {}) {
    data.check();
    LinearModel m;
    m.loss_ = loss;
    m.weights_.assign(data.classes, std::vector<double>(data.dimension, 0.0));
    m.bias_.assign(data.classes, 0.0);
    const double n = static_cast<double>(data.size());
    std::vector<double> grad(data.dimension);
    for (std::size_t c = 0; c < data.classes; ++c) {
      auto& w = m.weights_[c];
      double& b = m.bias_[c];
      for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t f = 0; f < w.size(); ++f) grad[f] = options.l2 * w[f];
        double grad_b = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const double y = data.labels[i] == c ? 1.0 : 0.0;
          const double z = dot(data.rows[i], w) + b;
          double g;
          if (loss == LinearLoss::logistic) {
            g = (1.0 / (1.0 + std::exp(-z)) - y) / n;
          } else {
            const double s = y > 0 ? 1.0 : -1.0;
            g = s * z < 1.0 ? -s / n : 0.0;
          }
          if (g == 0) continue;
          for (const auto& [f, v] : data.rows[i]) grad[f] += g * v;
          grad_b += g;
        }
        for (std::size_t f = 0; f < w.size(); ++f) w[f] -= options.learning_rate * grad[f];
        b -= options.learning_rate * grad_b;
      }
    }
    return m;
  }

  std::string kind() const override {
    return loss_ == LinearLoss::logistic ? "logistic_regression" : "linear_svm";
  }

  std::vector<double> decision(const SparseRow& row) const {
    std::vector<double> s(weights_.size());
    for (std::size_t c = 0; c < weights_.size(); ++c) s[c] = dot(row, weights_[c]) + bias_[c];
    return s;
  }

  std::size_t predict(const SparseRow& row) const override { return argmax(decision(row)); }

  nlohmann::json to_json() const override {
    return {{"kind", kind()}, {"weights", weights_}, {"bias", bias_}};
  }

  static LinearModel from_json(const nlohmann::json& j) {
    LinearModel m;
    auto kind = j.at("kind").get<std::string>();
    m.loss_ = kind == "linear_svm" ? LinearLoss::hinge : LinearLoss::logistic;
    m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    m.bias_ = j.at("bias").get<std::vector<double>>();
    return m;
  }

 private:
  LinearLoss loss_ = LinearLoss::logistic;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

}  // namespace lfgen::ml
