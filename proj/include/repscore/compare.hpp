#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "repscore/eval.hpp"
#include "repscore/trainer.hpp"

namespace repscore {

struct ArmReport {
  LossConfig loss;
  TrainResult training;
  double probe_accuracy = 0.0;
  double prevalence = 0.0;
  double mean_q = 0.0;
  double bottom_quartile_q = 0.0;
  double mean_exact_sparsity = 0.0;
  std::optional<double> q_auroc;  // empty when held-out correctness is one-class
  std::optional<double> q_auprc;
  std::vector<MetricAuc> benchmark;

  // Held-out split artifacts for figure exports.
  Matrix test_h;
  std::vector<int> test_labels;
  ProbeEvaluation test_eval;
  QualityReport test_report;
  Vector test_sparsity;
  std::vector<ClassProfile> profiles;
};

/// Encodes the un-augmented dataset with trained params, fits the probe on
/// the train split and scores everything on the held-out split.
ArmReport evaluate_arm(const SyntheticDataset& ds, const Split& split, const ExperimentConfig& exp,
                       const LossConfig& loss, TrainResult training);

// Trains from the experiment's initialization and evaluates.
ArmReport run_arm(const SyntheticDataset& ds, const Split& split, const ExperimentConfig& exp,
                  const LossConfig& loss, const EncoderParams& init);

struct ComparisonReport {
  ArmReport baseline;
  ArmReport regularized;
  std::optional<EncoderParams> pretrained;
};

/// Trains both arms from the identical initialization (after optional shared
/// pretraining) and reports accuracy, Q-Score statistics and sparsity.
ComparisonReport ab_compare(const SyntheticDataset& ds, const LossConfig& base,
                            const LossConfig& reg, const ExperimentConfig& exp);

// Mean of the lowest ceil(n/4) defined Q-Scores.
double bottom_quartile_mean(const QualityReport& report);

// Fraction of total column L1 mass held by the `top` heaviest columns.
double top_column_mass_fraction(const Eigen::Ref<const Matrix>& h, int top = 3);

nlohmann::json arm_summary(const ArmReport& arm);
nlohmann::json comparison_summary(const ComparisonReport& report);

}  // namespace repscore
