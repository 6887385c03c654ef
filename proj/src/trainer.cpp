#include "repscore/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace repscore {

void OptimConfig::validate() const {
  if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0))
    throw Error(ErrorCode::InvalidConfig, "lr must be > 0 and momentum in [0, 1)");
  if (steps < 0) throw Error(ErrorCode::InvalidConfig, "steps must be >= 0");
  if (batch_size < 2) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 2 (2N >= 4 views)");
}

void to_json(nlohmann::json& j, const OptimConfig& c) {
  j = {{"lr", c.lr}, {"momentum", c.momentum}, {"steps", c.steps}, {"batch_size", c.batch_size},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, OptimConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const EncoderShape& c) {
  j = {{"input", c.input},
       {"hidden", c.hidden},
       {"representation", c.representation},
       {"head_hidden", c.head_hidden},
       {"projection", c.projection}};
}

void from_json(const nlohmann::json& j, EncoderShape& c) {
  c.input = j.value("input", c.input);
  c.hidden = j.value("hidden", c.hidden);
  c.representation = j.value("representation", c.representation);
  c.head_hidden = j.value("head_hidden", c.head_hidden);
  c.projection = j.value("projection", c.projection);
}

TrainResult train_encoder(const Eigen::Ref<const Matrix>& inputs, const LossConfig& cfg,
                          const OptimConfig& opt, const AugmentConfig& aug,
                          const EncoderParams& init) {
  cfg.validate();
  opt.validate();
  aug.validate();
  init.validate();
  if (inputs.cols() != init.input_size())
    throw Error(ErrorCode::ShapeMismatch, "dataset dimension does not match encoder input");
  if (opt.batch_size > inputs.rows())
    throw Error(ErrorCode::InvalidConfig, "batch_size exceeds the number of training samples");

  TrainResult out{init, {}};
  out.history.reserve(static_cast<std::size_t>(opt.steps));
  Vector theta = flatten(init);
  Vector velocity = Vector::Zero(theta.size());
  EncoderParams params = init;
  const double norm_scale = static_cast<double>(inputs.rows()) / static_cast<double>(opt.batch_size);

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  ViewBatch batch{Matrix(opt.batch_size, inputs.cols()), Matrix(opt.batch_size, inputs.cols())};
  for (long step = 0; step < opt.steps; ++step) {
    for (int slot = 0; slot < opt.batch_size; ++slot) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const auto row = static_cast<Eigen::Index>(order[cursor++]);
      auto [v1, v2] = augment(inputs.row(row).transpose(), aug,
                              mix_seed(opt.seed, static_cast<std::uint64_t>(step) + 1,
                                       static_cast<std::uint64_t>(slot)));
      batch.view1.row(slot) = v1.transpose();
      batch.view2.row(slot) = v2.transpose();
    }

    LossGradientResult r;
    try {
      r = loss_gradients(params, batch, cfg, norm_scale);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteGradient || e.code() == ErrorCode::ZeroNormEmbedding)
        throw NonFiniteGradientError(step, e.what());
      throw;
    }
    const LossBreakdown& b = r.breakdown;
    if (!std::isfinite(b.total)) throw NonFiniteGradientError(step, "loss is not finite");
    out.history.push_back({step, b.contrastive, b.q_reg, b.column_penalty, b.total, b.alpha, b.beta,
                           static_cast<std::size_t>(std::count(b.q_mask.begin(), b.q_mask.end(), true)),
                           static_cast<std::size_t>(
                               std::count(b.column_mask.begin(), b.column_mask.end(), true))});

    velocity = opt.momentum * velocity + flatten(r.grads);
    theta -= opt.lr * velocity;
    if (!theta.allFinite()) throw NonFiniteGradientError(step, "parameters diverged");
    unflatten(theta, params);
  }
  out.params = std::move(params);
  return out;
}

void save_history(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::out | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << "step,contrastive,q_reg,column_penalty,total,alpha,beta,q_masked,columns_masked\n";
  for (const auto& h : history) {
    os << h.step << ',' << format_double(h.contrastive) << ',' << format_double(h.q_reg) << ','
       << format_double(h.column_penalty) << ',' << format_double(h.total) << ','
       << format_double(h.alpha) << ',' << format_double(h.beta) << ',' << h.q_masked << ','
       << h.columns_masked << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<HistoryRow> load_history(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<HistoryRow> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line.rfind("step", 0) == 0) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 9) throw Error(ErrorCode::ParseError, "history row needs 9 columns");
    HistoryRow h;
    h.step = static_cast<long>(parse_double(c[0]));
    h.contrastive = parse_double(c[1]);
    h.q_reg = parse_double(c[2]);
    h.column_penalty = parse_double(c[3]);
    h.total = parse_double(c[4]);
    // alpha may legitimately be inf when every row is selected
    h.alpha = c[5] == "inf" ? std::numeric_limits<double>::infinity() : parse_double(c[5]);
    h.beta = parse_double(c[6]);
    h.q_masked = static_cast<std::size_t>(parse_double(c[7]));
    h.columns_masked = static_cast<std::size_t>(parse_double(c[8]));
    out.push_back(h);
  }
  return out;
}

void ExperimentConfig::resolve_seeds() {
  data.seed = seed;
  optim.seed = mix_seed(seed, 2);
}

void ExperimentConfig::validate() const {
  data.validate();
  augment.validate();
  shape.validate();
  loss.validate();
  optim.validate();
  if (shape.input != data.dim)
    throw Error(ErrorCode::InvalidConfig, "model input size must equal dataset dim");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie in (0, 1)");
  if (pretrain_steps < 0) throw Error(ErrorCode::InvalidConfig, "pretrain_steps must be >= 0");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"seed", c.seed},   {"data", c.data},   {"augment", c.augment},
       {"model", c.shape}, {"loss", c.loss},   {"optim", c.optim},
       {"probe", c.probe}, {"train_fraction", c.train_fraction},
       {"pretrain_steps", c.pretrain_steps}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = default_experiment();
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("data")) from_json(j.at("data"), c.data);
    if (j.contains("augment")) from_json(j.at("augment"), c.augment);
    if (j.contains("model")) from_json(j.at("model"), c.shape);
    if (j.contains("loss")) from_json(j.at("loss"), c.loss);
    if (j.contains("optim")) from_json(j.at("optim"), c.optim);
    if (j.contains("probe")) from_json(j.at("probe"), c.probe);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.pretrain_steps = j.value("pretrain_steps", c.pretrain_steps);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.resolve_seeds();
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.loss.lambda1 = 0.1;
  c.loss.lambda2 = 0.1;
  c.loss.beta = ThresholdPolicy::absolute(3000.0);
  c.resolve_seeds();
  return c;
}

}  // namespace repscore
