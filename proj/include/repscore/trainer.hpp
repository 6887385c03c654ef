#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "repscore/dataset.hpp"
#include "repscore/encoder.hpp"
#include "repscore/loss.hpp"
#include "repscore/probe.hpp"

namespace repscore {

struct OptimConfig {
  double lr = 0.05;
  double momentum = 0.9;
  int steps = 2000;
  int batch_size = 32;
  std::uint64_t seed = 7;

  void validate() const;
  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

void to_json(nlohmann::json& j, const OptimConfig& c);
void from_json(const nlohmann::json& j, OptimConfig& c);
void to_json(nlohmann::json& j, const EncoderShape& c);
void from_json(const nlohmann::json& j, EncoderShape& c);

struct HistoryRow {
  long step = 0;
  double contrastive = 0.0;
  double q_reg = 0.0;
  double column_penalty = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t q_masked = 0;
  std::size_t columns_masked = 0;
};

struct TrainResult {
  EncoderParams params;
  std::vector<HistoryRow> history;
};

/// Plain momentum descent on total_loss over augmented view pairs of the
/// given input rows. Row t of the history is the batch loss evaluated before
/// update t. Bitwise deterministic in (init, opt.seed).
TrainResult train_encoder(const Eigen::Ref<const Matrix>& inputs, const LossConfig& cfg,
                          const OptimConfig& opt, const AugmentConfig& aug,
                          const EncoderParams& init);

void save_history(const std::vector<HistoryRow>& history, const std::filesystem::path& path);
std::vector<HistoryRow> load_history(const std::filesystem::path& path);

/// Everything needed to reproduce a desk-scale run from one seed.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  DatasetConfig data;
  AugmentConfig augment;
  EncoderShape shape;
  LossConfig loss;
  OptimConfig optim;
  ProbeConfig probe;
  double train_fraction = 0.8;
  // Shared baseline steps run before the two arms of a comparison diverge.
  int pretrain_steps = 0;

  // Propagates seed into the dataset, initialization, optimizer and split.
  void resolve_seeds();
  std::uint64_t init_seed() const { return mix_seed(seed, 1); }
  std::uint64_t split_seed() const { return mix_seed(seed, 3); }
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Default toy experiment: r=64, hidden=128, l=32, m=16, K=8, 64 per class,
/// batch 32, tau=0.2, seed 7. The loss is the regularized setting
/// lambda1 = lambda2 = 0.1 with an absolute column threshold of 3000.
ExperimentConfig default_experiment();

}  // namespace repscore
