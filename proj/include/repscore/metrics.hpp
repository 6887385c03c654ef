#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repscore/errors.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

// Per-sample quality metrics of a single representation vector. All
// functions accept any Eigen row or column vector expression.

template <typename Derived>
typename Derived::Scalar mean(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() < 1) throw Error(ErrorCode::EmptyVector, "mean of empty vector");
  return v.sum() / static_cast<typename Derived::Scalar>(v.size());
}

/// Population standard deviation (divides by the vector length).
template <typename Derived>
typename Derived::Scalar std_dev(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() < 1) throw Error(ErrorCode::EmptyVector, "std of empty vector");
  if (v.size() < 2) throw Error(ErrorCode::SingleElement, "std needs at least two entries");
  const Scalar mu = mean(v);
  return std::sqrt((v.array() - mu).square().sum() / static_cast<Scalar>(v.size()));
}

/// Fraction of entries with |value| < eta, 0 < eta < 1.
template <typename Derived>
typename Derived::Scalar soft_sparsity(const Eigen::MatrixBase<Derived>& v,
                                       typename Derived::Scalar eta) {
  using Scalar = typename Derived::Scalar;
  if (!(eta > Scalar(0) && eta < Scalar(1)))
    throw Error(ErrorCode::InvalidEta, "eta must lie in (0, 1)");
  if (v.size() < 1) throw Error(ErrorCode::EmptyVector, "soft sparsity of empty vector");
  const auto below = (v.array().abs() < eta).count();
  return static_cast<Scalar>(below) / static_cast<Scalar>(v.size());
}

template <typename Derived>
typename Derived::Scalar l1_norm(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() < 1) throw Error(ErrorCode::EmptyVector, "l1 norm of empty vector");
  return v.template lpNorm<1>();
}

/// (max(v) - mean) / std, using the raw (signed) maximum.
template <typename Derived>
typename Derived::Scalar zscore_max(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar sigma = std_dev(v);
  const Scalar hi = v.maxCoeff();
  // A constant vector has sigma == 0 mathematically even when rounding in
  // the two-pass variance leaves a residue.
  if (sigma == Scalar(0) || hi == v.minCoeff())
    throw Error(ErrorCode::DegenerateRepresentation, "representation has zero spread");
  return (hi - mean(v)) / sigma;
}

/// zscore_max / l1_norm. Higher values mean a sparse vector with at least one
/// strongly deviating feature.
template <typename Derived>
typename Derived::Scalar q_score(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = l1_norm(v);
  if (norm == Scalar(0)) throw Error(ErrorCode::ZeroNorm, "q-score of zero vector");
  return zscore_max(v) / norm;
}

enum class QualityFlag { Ok, Degenerate, ZeroNorm };

std::string_view to_string(QualityFlag flag);
QualityFlag quality_flag_from_string(std::string_view s);

struct QualityRecord {
  std::string sample_id;
  double mean = 0.0;
  double std_dev = 0.0;
  double soft_sparsity = 0.0;
  double l1_norm = 0.0;
  std::optional<double> zscore_max;
  std::optional<double> q_score;
  QualityFlag flag = QualityFlag::Ok;
};

struct QualityReport {
  std::vector<QualityRecord> records;
  double eta = 0.01;

  std::size_t size() const noexcept { return records.size(); }
};

inline constexpr double kDefaultEta = 0.01;

// Computes every metric for every row. Rows whose z-score or Q-Score is
// undefined are flagged rather than dropped. Requires at least two features.
QualityReport batch_quality_report(const RepresentationMatrix& m, double eta = kDefaultEta);

void save_quality_report(const QualityReport& report, const std::filesystem::path& path);
QualityReport load_quality_report(const std::filesystem::path& path);

}  // namespace repscore
