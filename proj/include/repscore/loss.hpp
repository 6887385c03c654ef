#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "json.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

/// How a regularizer threshold is chosen for a batch.
///
/// Absolute compares against a fixed value. Percentile(p) selects by rank:
/// for the Q-Score threshold the ceil(p% of n) lowest-scoring rows, for the
/// column threshold the ceil((100 - p)% of n) heaviest columns. Ties in rank
/// are broken by index so the selection is deterministic.
struct ThresholdPolicy {
  enum class Kind { Absolute, Percentile };
  Kind kind = Kind::Percentile;
  double value = 0.0;

  static ThresholdPolicy absolute(double v) { return {Kind::Absolute, v}; }
  static ThresholdPolicy percentile(double p) { return {Kind::Percentile, p}; }

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

struct LossConfig {
  double tau = 0.2;
  double lambda1 = 0.0;  // Q-Score reward weight
  double lambda2 = 0.0;  // column L1 penalty weight
  ThresholdPolicy alpha = ThresholdPolicy::percentile(25.0);
  ThresholdPolicy beta = ThresholdPolicy::percentile(90.0);
  double eta = 0.01;  // carried for reporting only

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

void to_json(nlohmann::json& j, const ThresholdPolicy& p);
void from_json(const nlohmann::json& j, ThresholdPolicy& p);
void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

// Minimum embedding norm accepted by the cosine similarity.
inline constexpr double kNormFloor = 1e-12;

double scaled_cosine_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                double tau);

struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad;  // dloss/dZ, empty unless requested
};

/// NT-Xent over 2N stacked embeddings where rows i and i + N are positive
/// pairs. Returns the mean negative log-softmax of each row's positive over
/// all other rows.
ContrastiveResult nt_xent(const Eigen::Ref<const Matrix>& z, double tau, bool with_grad = false);
double nt_xent_loss(const ProjectionMatrix& z, double tau);

struct QRegResult {
  double value = 0.0;       // sum of Q over masked rows
  std::vector<bool> mask;   // rows whose Q is rewarded
  Vector q;                 // per-row Q-Score, NaN where undefined
  double alpha = 0.0;       // resolved threshold
};

/// Q-Score reward term over rows of H. Rows with undefined Q are never
/// masked in. A supplied mask overrides the policy (used to freeze it).
QRegResult q_regularizer(const Eigen::Ref<const Matrix>& h, const LossConfig& cfg,
                         const std::vector<bool>* frozen_mask = nullptr);

/// d/dH of sum_i mask_i * Q(h_i). Zero rows where the mask is off.
Matrix q_regularizer_grad(const Eigen::Ref<const Matrix>& h, const std::vector<bool>& mask);

struct ColumnPenaltyResult {
  double value = 0.0;      // sum of masked column L1 norms
  std::vector<bool> mask;  // penalized columns
  Vector column_norms;
  double beta = 0.0;
};

/// Column L1 penalty. norm_scale multiplies the batch column norms before
/// they are compared against an absolute beta, so that beta can be set on a
/// dataset-wide scale; it does not change the penalty value.
ColumnPenaltyResult column_penalty(const Eigen::Ref<const Matrix>& h, const LossConfig& cfg,
                                   double norm_scale = 1.0,
                                   const std::vector<bool>* frozen_mask = nullptr);

Matrix column_penalty_grad(const Eigen::Ref<const Matrix>& h, const std::vector<bool>& mask);

struct FrozenMasks {
  std::vector<bool> q_mask;
  std::vector<bool> column_mask;
};

struct LossBreakdown {
  double contrastive = 0.0;
  double q_reg = 0.0;           // q_regularizer value / 2N
  double column_penalty = 0.0;  // column_penalty value / 2N
  double total = 0.0;
  std::vector<bool> q_mask;
  std::vector<bool> column_mask;
  double alpha = 0.0;
  double beta = 0.0;

  FrozenMasks masks() const { return {q_mask, column_mask}; }
};

struct LossGradients {
  Matrix dz;  // w.r.t. the stacked projections [Z; Z~]
  Matrix dh;  // w.r.t. the stacked representations [H; H~]
};

// Which terms contribute to the gradient. Values in the breakdown are always
// computed in full.
enum LossTerm : unsigned {
  kContrastiveTerm = 1u << 0,
  kQRegTerm = 1u << 1,
  kColumnTerm = 1u << 2,
  kAllTerms = kContrastiveTerm | kQRegTerm | kColumnTerm,
};

/// total = contrastive - lambda1 * q_reg + lambda2 * column_penalty, with
/// both regularizer sums divided by the 2N representation rows.
///
/// z1/z2 hold the two views' projections (N x m each); h stacks both views'
/// representations in the same order (2N x l).
LossBreakdown total_loss(const Eigen::Ref<const Matrix>& z1, const Eigen::Ref<const Matrix>& z2,
                         const Eigen::Ref<const Matrix>& h, const LossConfig& cfg,
                         double norm_scale = 1.0, const FrozenMasks* frozen = nullptr,
                         LossGradients* grads = nullptr, unsigned terms = kAllTerms);

}  // namespace repscore
