#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "repscore/metrics.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

// Throughout, the positive class is a correctly classified sample: a score is
// judged by how well it ranks correct samples above incorrect ones.

enum class CurveKind { Roc, Pr };

struct CurvePoint {
  double x = 0.0;  // FPR for ROC, recall for PR
  double y = 0.0;  // TPR for ROC, precision for PR
  double threshold = std::numeric_limits<double>::infinity();
};

struct CurveResult {
  CurveKind kind = CurveKind::Roc;
  std::vector<CurvePoint> points;
  double area = 0.0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// ROC over a descending sweep of unique scores; tied scores share one
/// threshold so the area equals P(s+ > s-) + 0.5 P(s+ == s-).
CurveResult roc_curve(const Eigen::Ref<const Vector>& scores, const std::vector<bool>& correctness);

/// Precision/recall over the same tie-grouped sweep. Area is the
/// non-interpolated step sum of (R_k - R_{k-1}) * P_k.
CurveResult pr_curve(const Eigen::Ref<const Vector>& scores, const std::vector<bool>& correctness);

enum class MetricId { Mean, Std, SoftSparsity, L1Norm, ZscoreMax, QScore };

inline constexpr MetricId kAllMetrics[] = {MetricId::Mean,   MetricId::Std,       MetricId::SoftSparsity,
                                           MetricId::L1Norm, MetricId::ZscoreMax, MetricId::QScore};

std::string_view metric_name(MetricId id);
std::optional<MetricId> metric_from_name(std::string_view name);

// Whether larger values of the metric predict a correct classification.
// Mean, std and L1 norm are read in the "lower is better" direction.
bool higher_is_correct(MetricId id);

struct MetricScores {
  Vector scores;               // oriented so that higher predicts correct
  std::vector<bool> correct;   // aligned with scores
  std::vector<std::size_t> rows;  // source row in the report
};

// Oriented scores for one metric with flagged rows excluded.
MetricScores oriented_scores(const QualityReport& report, const std::vector<bool>& correctness,
                             MetricId id);

struct MetricAuc {
  MetricId metric;
  double auroc = 0.0;
  double auprc = 0.0;
  double prevalence = 0.0;
  std::size_t n_used = 0;
};

/// AUROC/AUPRC of every metric as a predictor of correctness.
std::vector<MetricAuc> metric_benchmark(const QualityReport& report,
                                        const std::vector<bool>& correctness);

struct ClassProfile {
  int class_id = 0;
  Vector mean_all;
  std::optional<Vector> mean_correct;    // empty when the class has no correct sample
  std::optional<Vector> mean_incorrect;  // empty when the class has no incorrect sample
  double accuracy = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
};

/// Per-class mean representations split by correctness, ordered by
/// descending class accuracy (ties by ascending class id).
std::vector<ClassProfile> class_profiles(const RepresentationMatrix& m, const LabelSet& labels);

/// One row per profile: the class mean sorted by descending magnitude.
Matrix sorted_feature_profile(const std::vector<ClassProfile>& profiles);

/// Per-row fraction of entries with |value| <= eps_zero.
Vector exact_sparsity(const RepresentationMatrix& m, double eps_zero = 0.0);

}  // namespace repscore
