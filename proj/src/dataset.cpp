#include "repscore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace repscore {

void DatasetConfig::validate() const {
  if (k_classes < 2) throw Error(ErrorCode::InvalidConfig, "need at least two classes");
  if (n_per_class < 2) throw Error(ErrorCode::InvalidConfig, "need at least two samples per class");
  if (dim < 1) throw Error(ErrorCode::InvalidConfig, "input dimension must be positive");
  if (!(within_noise >= 0.0) || !(mix_max >= 0.0 && mix_max <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "noise must be >= 0 and mix_max in [0, 1]");
}

void AugmentConfig::validate() const {
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_sigma must be >= 0");
  if (!(mask_fraction >= 0.0 && mask_fraction <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "mask_fraction must lie in [0, 1]");
  if (!(scale_min > 0.0 && scale_min <= scale_max))
    throw Error(ErrorCode::InvalidConfig, "scale range must satisfy 0 < min <= max");
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = {{"k_classes", c.k_classes},       {"n_per_class", c.n_per_class}, {"dim", c.dim},
       {"within_noise", c.within_noise}, {"mix_max", c.mix_max},         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  c.k_classes = j.value("k_classes", c.k_classes);
  c.n_per_class = j.value("n_per_class", c.n_per_class);
  c.dim = j.value("dim", c.dim);
  c.within_noise = j.value("within_noise", c.within_noise);
  c.mix_max = j.value("mix_max", c.mix_max);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = {{"noise_sigma", c.noise_sigma},
       {"mask_fraction", c.mask_fraction},
       {"scale_min", c.scale_min},
       {"scale_max", c.scale_max}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.mask_fraction = j.value("mask_fraction", c.mask_fraction);
  c.scale_min = j.value("scale_min", c.scale_min);
  c.scale_max = j.value("scale_max", c.scale_max);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SyntheticDataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix templates(cfg.k_classes, cfg.dim);
  for (Eigen::Index c = 0; c < templates.rows(); ++c)
    for (Eigen::Index j = 0; j < templates.cols(); ++j) templates(c, j) = unit(rng);

  SyntheticDataset ds;
  ds.k_classes = cfg.k_classes;
  ds.samples.resize(static_cast<Eigen::Index>(cfg.k_classes) * cfg.n_per_class, cfg.dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> other_offset(1, cfg.k_classes - 1);
  Eigen::Index row = 0;
  for (int c = 0; c < cfg.k_classes; ++c) {
    for (int s = 0; s < cfg.n_per_class; ++s, ++row) {
      const int other = (c + other_offset(rng)) % cfg.k_classes;
      const double w = cfg.mix_max * unit(rng);
      for (Eigen::Index j = 0; j < cfg.dim; ++j) {
        const double eps = noise(rng);
        const double v = templates(c, j) + w * templates(other, j) + cfg.within_noise * eps;
        ds.samples(row, j) = std::clamp(v, 0.0, 1.0);
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

std::pair<Vector, Vector> augment(const Eigen::Ref<const Vector>& sample, const AugmentConfig& cfg,
                                  std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const Eigen::Index r = sample.size();
  const auto n_mask = static_cast<Eigen::Index>(std::lround(cfg.mask_fraction * static_cast<double>(r)));
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(r));

  const auto view = [&] {
    Vector v = sample;
    if (cfg.scale_max > cfg.scale_min) {
      std::uniform_real_distribution<double> scale(cfg.scale_min, cfg.scale_max);
      v *= scale(rng);
    } else {
      v *= cfg.scale_min;
    }
    if (cfg.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
      for (Eigen::Index j = 0; j < r; ++j) v[j] += noise(rng);
    }
    if (n_mask > 0) {
      std::iota(coords.begin(), coords.end(), Eigen::Index{0});
      std::shuffle(coords.begin(), coords.end(), rng);
      for (Eigen::Index k = 0; k < n_mask; ++k) v[coords[static_cast<std::size_t>(k)]] = 0.0;
    }
    return v;
  };
  Vector first = view();
  Vector second = view();
  return {std::move(first), std::move(second)};
}

Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  Split split;
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t m = 0; m < members.size(); ++m)
      (m < n_train ? split.train : split.test).push_back(members[m]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Matrix gather_rows(const Eigen::Ref<const Matrix>& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> gather(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(v[i]);
  return out;
}

void save_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_raw_matrix(ds.samples, dir / "samples.repb", MatrixFormat::Repb);
  LabelSet labels;
  labels.class_labels = ds.labels;
  save_labels(labels, dir / "labels.csv");
}

SyntheticDataset load_dataset(const std::filesystem::path& dir) {
  SyntheticDataset ds;
  const auto path = std::filesystem::is_directory(dir) ? dir / "samples.repb" : dir;
  ds.samples = load_matrix(path).data();
  const auto labels_path = path.parent_path() / "labels.csv";
  if (std::filesystem::exists(labels_path)) {
    LabelSet labels = load_labels(labels_path);
    labels.validate(static_cast<std::size_t>(ds.samples.rows()));
    ds.labels = labels.class_labels;
    ds.k_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  }
  return ds;
}

}  // namespace repscore
