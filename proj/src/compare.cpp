#include "repscore/compare.hpp"

#include <algorithm>
#include <cmath>

namespace repscore {

double bottom_quartile_mean(const QualityReport& report) {
  std::vector<double> q;
  for (const auto& r : report.records)
    if (r.q_score) q.push_back(*r.q_score);
  if (q.empty()) return 0.0;
  std::sort(q.begin(), q.end());
  const std::size_t k = (q.size() + 3) / 4;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += q[i];
  return sum / static_cast<double>(k);
}

double top_column_mass_fraction(const Eigen::Ref<const Matrix>& h, int top) {
  Vector norms = h.cwiseAbs().colwise().sum().transpose();
  const double total = norms.sum();
  if (total == 0.0) return 0.0;
  std::vector<double> v(norms.data(), norms.data() + norms.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  double head = 0.0;
  for (int i = 0; i < top && i < static_cast<int>(v.size()); ++i) head += v[static_cast<std::size_t>(i)];
  return head / total;
}

ArmReport evaluate_arm(const SyntheticDataset& ds, const Split& split, const ExperimentConfig& exp,
                       const LossConfig& loss, TrainResult training) {
  ArmReport arm;
  arm.loss = loss;
  arm.training = std::move(training);

  const Matrix h_all = encode(arm.training.params, ds.samples).h;
  const Matrix h_train = gather_rows(h_all, split.train);
  arm.test_h = gather_rows(h_all, split.test);
  arm.test_labels = gather(ds.labels, split.test);
  const LinearProbe probe = train_linear_probe(h_train, gather(ds.labels, split.train), exp.probe);
  arm.test_eval = evaluate_probe(probe, arm.test_h, arm.test_labels);
  arm.probe_accuracy = arm.test_eval.accuracy;
  arm.prevalence = arm.probe_accuracy;

  std::vector<std::string> ids;
  for (std::size_t i : split.test) ids.push_back(std::to_string(i));
  const RepresentationMatrix test_rep(arm.test_h, ids);
  arm.test_report = batch_quality_report(test_rep, loss.eta);
  arm.test_sparsity = exact_sparsity(test_rep, 0.0);
  arm.mean_exact_sparsity = arm.test_sparsity.mean();

  double q_sum = 0.0;
  std::size_t q_n = 0;
  for (const auto& r : arm.test_report.records)
    if (r.q_score) {
      q_sum += *r.q_score;
      ++q_n;
    }
  arm.mean_q = q_n ? q_sum / static_cast<double>(q_n) : 0.0;
  arm.bottom_quartile_q = bottom_quartile_mean(arm.test_report);

  try {
    arm.benchmark = metric_benchmark(arm.test_report, arm.test_eval.correct);
    for (const auto& row : arm.benchmark)
      if (row.metric == MetricId::QScore) {
        arm.q_auroc = row.auroc;
        arm.q_auprc = row.auprc;
        arm.prevalence = row.prevalence;
      }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OneClassOnly && e.code() != ErrorCode::NoPositives) throw;
  }

  LabelSet labels;
  labels.class_labels = arm.test_labels;
  labels.predicted_labels = arm.test_eval.predicted;
  arm.profiles = class_profiles(test_rep, labels);
  return arm;
}

ArmReport run_arm(const SyntheticDataset& ds, const Split& split, const ExperimentConfig& exp,
                  const LossConfig& loss, const EncoderParams& init) {
  const Matrix train_x = gather_rows(ds.samples, split.train);
  TrainResult tr = train_encoder(train_x, loss, exp.optim, exp.augment, init);
  return evaluate_arm(ds, split, exp, loss, std::move(tr));
}

ComparisonReport ab_compare(const SyntheticDataset& ds, const LossConfig& base,
                            const LossConfig& reg, const ExperimentConfig& exp) {
  exp.validate();
  base.validate();
  reg.validate();
  const Split split = stratified_split(ds.labels, exp.train_fraction, exp.split_seed());
  EncoderParams init = init_encoder(exp.shape, exp.init_seed());

  ComparisonReport report;
  if (exp.pretrain_steps > 0) {
    OptimConfig pre = exp.optim;
    pre.steps = exp.pretrain_steps;
    pre.seed = mix_seed(exp.optim.seed, 4);
    init = train_encoder(gather_rows(ds.samples, split.train), base, pre, exp.augment, init).params;
    report.pretrained = init;
  }
  report.baseline = run_arm(ds, split, exp, base, init);
  report.regularized = run_arm(ds, split, exp, reg, init);
  return report;
}

nlohmann::json arm_summary(const ArmReport& arm) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  const auto& hist = arm.training.history;
  return {{"loss", arm.loss},
          {"probe_accuracy", arm.probe_accuracy},
          {"prevalence", arm.prevalence},
          {"mean_q_score", arm.mean_q},
          {"bottom_quartile_q_score", arm.bottom_quartile_q},
          {"q_score_auroc", opt(arm.q_auroc)},
          {"q_score_auprc", opt(arm.q_auprc)},
          {"mean_exact_sparsity", arm.mean_exact_sparsity},
          {"top3_column_mass", top_column_mass_fraction(arm.test_h, 3)},
          {"initial_contrastive", hist.empty() ? 0.0 : hist.front().contrastive},
          {"final_contrastive", hist.empty() ? 0.0 : hist.back().contrastive},
          {"n_test", arm.test_labels.size()}};
}

nlohmann::json comparison_summary(const ComparisonReport& report) {
  nlohmann::json j = {{"baseline", arm_summary(report.baseline)},
                      {"regularized", arm_summary(report.regularized)}};
  const double b = report.baseline.probe_accuracy;
  j["relative_accuracy_change"] = b > 0.0 ? (report.regularized.probe_accuracy - b) / b : 0.0;
  return j;
}

}  // namespace repscore
