#pragma once

#include <vector>

#include "json.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

struct ProbeConfig {
  double lr = 0.5;
  int max_epochs = 3000;
  double grad_tol = 1e-5;
  double l2 = 1e-4;

  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

void to_json(nlohmann::json& j, const ProbeConfig& c);
void from_json(const nlohmann::json& j, ProbeConfig& c);

/// Multinomial logistic regression on standardized features.
struct LinearProbe {
  Matrix weight;  // l x K
  Vector bias;    // K
  Vector feature_mean;
  Vector feature_scale;
  ProbeConfig config;
  int epochs_run = 0;
  double final_grad_norm = 0.0;

  Eigen::Index n_classes() const noexcept { return weight.cols(); }
  Matrix logits(const Eigen::Ref<const Matrix>& h) const;
};

/// Full-batch gradient descent until the gradient norm drops below
/// grad_tol or max_epochs is reached.
LinearProbe train_linear_probe(const Eigen::Ref<const Matrix>& h, const std::vector<int>& labels,
                               const ProbeConfig& cfg = {});

struct ProbeEvaluation {
  double accuracy = 0.0;
  std::vector<int> predicted;
  std::vector<bool> correct;
};

ProbeEvaluation evaluate_probe(const LinearProbe& probe, const Eigen::Ref<const Matrix>& h,
                               const std::vector<int>& labels);

}  // namespace repscore
