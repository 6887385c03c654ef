#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repscore/errors.hpp"

namespace repscore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// N x l matrix of per-sample representations. Rows are samples.
///
/// Construction validates shape and finiteness; an instance that exists is
/// always valid, so downstream code never re-checks.
class RepresentationMatrix {
 public:
  explicit RepresentationMatrix(Matrix data, std::vector<std::string> sample_ids = {});

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index n_samples() const noexcept { return data_.rows(); }
  Eigen::Index n_features() const noexcept { return data_.cols(); }
  auto row(Eigen::Index i) const { return data_.row(i); }

  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  // Falls back to the row index when no identifiers were supplied.
  std::string sample_id(Eigen::Index i) const;

  friend bool operator==(const RepresentationMatrix& a, const RepresentationMatrix& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_ && a.sample_ids_ == b.sample_ids_;
  }

 private:
  Matrix data_;
  std::vector<std::string> sample_ids_;
};

/// N x m projection-head outputs; every row must have nonzero norm.
class ProjectionMatrix {
 public:
  explicit ProjectionMatrix(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index n_samples() const noexcept { return data_.rows(); }
  Eigen::Index n_features() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

struct LabelSet {
  std::vector<std::string> sample_ids;
  std::vector<int> class_labels;
  std::optional<std::vector<int>> predicted_labels;
  std::optional<std::vector<bool>> correctness;

  std::size_t size() const noexcept { return class_labels.size(); }

  // Checks lengths against n_samples, non-negative class ids, and agreement
  // between stored correctness and (class, predicted) when both exist.
  void validate(std::size_t n_samples) const;

  // Stored flags, else derived from predicted == class. Throws
  // MissingCorrectness when neither is available.
  std::vector<bool> resolved_correctness() const;
  bool has_correctness() const noexcept {
    return correctness.has_value() || predicted_labels.has_value();
  }
};

enum class MatrixFormat { Csv, Repb };

// Picks the format from the extension (".repb" -> Repb, anything else Csv).
MatrixFormat format_from_path(const std::filesystem::path& path);

Matrix load_raw_matrix(const std::filesystem::path& path, MatrixFormat format);
void save_raw_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format);

RepresentationMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
RepresentationMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const RepresentationMatrix& m, const std::filesystem::path& path,
                 MatrixFormat format);
void save_matrix(const RepresentationMatrix& m, const std::filesystem::path& path);

LabelSet load_labels(const std::filesystem::path& path);
void save_labels(const LabelSet& labels, const std::filesystem::path& path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view token);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace repscore
