#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "json.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

struct DatasetConfig {
  int k_classes = 8;
  int n_per_class = 64;
  int dim = 64;               // r
  double within_noise = 0.3;  // std of the per-sample Gaussian perturbation
  // Each sample carries a random other class template as additive clutter
  // with weight drawn from U(0, mix_max); larger values make classes overlap.
  double mix_max = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct AugmentConfig {
  double noise_sigma = 0.1;
  double mask_fraction = 0.25;
  double scale_min = 0.8;
  double scale_max = 1.2;

  void validate() const;
  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);
void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

/// Flat "images" in [0, 1]^r drawn around one random template per class.
struct SyntheticDataset {
  Matrix samples;           // N x r
  std::vector<int> labels;  // class id per row, class-major order
  int k_classes = 0;

  Eigen::Index size() const noexcept { return samples.rows(); }
  Eigen::Index dim() const noexcept { return samples.cols(); }
};

SyntheticDataset generate_dataset(const DatasetConfig& cfg);

/// Two independently transformed views: scale jitter, additive Gaussian
/// noise, then exactly round(mask_fraction * r) coordinates zeroed per view.
std::pair<Vector, Vector> augment(const Eigen::Ref<const Vector>& sample, const AugmentConfig& cfg,
                                  std::uint64_t seed);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per-class shuffle, first round(train_fraction * n_c) of each class train.
Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

Matrix gather_rows(const Eigen::Ref<const Matrix>& m, const std::vector<std::size_t>& rows);
std::vector<int> gather(const std::vector<int>& v, const std::vector<std::size_t>& rows);

// samples.repb + labels.csv
void save_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir);
SyntheticDataset load_dataset(const std::filesystem::path& dir);

// SplitMix64 finaliser; derives independent stream seeds from (seed, a, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace repscore
