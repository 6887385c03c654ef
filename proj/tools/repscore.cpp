// repscore: representation quality metrics, contrastive training and
// saliency from the command line.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "repscore/compare.hpp"
#include "repscore/dataset.hpp"
#include "repscore/eval.hpp"
#include "repscore/exports.hpp"
#include "repscore/manifest.hpp"
#include "repscore/metrics.hpp"
#include "repscore/repstore.hpp"
#include "repscore/saliency.hpp"
#include "repscore/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace repscore;

namespace {

// Runs one command from its resolved options and returns the stdout summary.
using Runner = json (*)(const json& opts);

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());
}

RunManifest start_manifest(const std::string& command, const json& opts, std::uint64_t seed,
                           const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
  RunManifest m;
  m.command = command;
  m.config = opts;
  m.seed = seed;
  for (const auto& p : inputs) m.add_input(p);
  m.outputs = outputs;
  const fs::path out = opts.at("out").get<std::string>();
  prepare_out(out);
  write_manifest(m, out / "manifest.json");
  return m;
}

ExperimentConfig experiment_from(const json& j) {
  ExperimentConfig exp = j.get<ExperimentConfig>();
  exp.validate();
  return exp;
}

ExperimentConfig load_experiment(const std::string& path) {
  return path.empty() ? default_experiment() : read_json(path).get<ExperimentConfig>();
}

json run_metrics(const json& opts) {
  const fs::path reps = opts.at("reps").get<std::string>();
  const fs::path out = opts.at("out").get<std::string>();
  const double eta = opts.at("eta").get<double>();
  start_manifest("metrics", opts, 0, {reps}, {"report.csv"});

  const RepresentationMatrix m = load_matrix(reps);
  const QualityReport report = batch_quality_report(m, eta);
  save_quality_report(report, out / "report.csv");

  std::size_t flagged = 0;
  for (const auto& r : report.records) flagged += r.flag != QualityFlag::Ok;
  return {{"rows", report.records.size()}, {"flagged", flagged}, {"report", (out / "report.csv").string()}};
}

json run_curves(const json& opts) {
  const fs::path report_path = opts.at("report").get<std::string>();
  const fs::path labels_path = opts.at("labels").get<std::string>();
  const fs::path out = opts.at("out").get<std::string>();
  const std::string which = opts.at("metric").get<std::string>();

  std::vector<MetricId> metrics;
  if (which == "all") {
    metrics.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
  } else if (auto id = metric_from_name(which)) {
    metrics.push_back(*id);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown metric '" + which + "'");
  }
  std::vector<std::string> outputs{"auc.json", "roc.svg", "pr.svg"};
  for (MetricId id : metrics) {
    outputs.push_back(std::string(metric_name(id)) + "_roc.csv");
    outputs.push_back(std::string(metric_name(id)) + "_pr.csv");
  }
  start_manifest("curves", opts, 0, {report_path, labels_path}, outputs);

  const QualityReport report = load_quality_report(report_path);
  const LabelSet labels = load_labels(labels_path);
  labels.validate(report.records.size());
  const std::vector<bool> correct = labels.resolved_correctness();

  std::vector<NamedCurve> rocs, prs;
  std::vector<MetricAuc> table;
  for (MetricId id : metrics) {
    const MetricScores s = oriented_scores(report, correct, id);
    const std::string name(metric_name(id));
    const CurveResult roc = roc_curve(s.scores, s.correct);
    const CurveResult pr = pr_curve(s.scores, s.correct);
    write_curve_csv(roc, out / (name + "_roc.csv"));
    write_curve_csv(pr, out / (name + "_pr.csv"));
    rocs.push_back({name, roc});
    prs.push_back({name, pr});
    table.push_back({id, roc.area, pr.area,
                     static_cast<double>(pr.n_positive) / static_cast<double>(pr.n_positive + pr.n_negative),
                     s.scores.size() > 0 ? static_cast<std::size_t>(s.scores.size()) : 0});
  }
  write_curves_svg(rocs, "ROC", out / "roc.svg");
  write_curves_svg(prs, "Precision-Recall", out / "pr.svg");
  const json auc = benchmark_to_json(table);
  write_json(auc, out / "auc.json");
  return {{"metrics", auc}};
}

json run_train(const json& opts) {
  const ExperimentConfig exp = experiment_from(opts.at("config"));
  const fs::path out = opts.at("out").get<std::string>();
  std::vector<fs::path> inputs;
  if (!opts.at("config_path").get<std::string>().empty()) inputs.emplace_back(opts.at("config_path").get<std::string>());
  start_manifest("train", opts, exp.seed, inputs, {"params", "history.csv", "dataset"});

  const SyntheticDataset ds = generate_dataset(exp.data);
  const Split split = stratified_split(ds.labels, exp.train_fraction, exp.split_seed());
  const EncoderParams init = init_encoder(exp.shape, exp.init_seed());
  const TrainResult r = train_encoder(gather_rows(ds.samples, split.train), exp.loss, exp.optim, exp.augment, init);

  save_params(r.params, out / "params");
  save_history(r.history, out / "history.csv");
  save_dataset(ds, out / "dataset");
  json summary{{"steps", r.history.size()}, {"params", (out / "params").string()}};
  if (!r.history.empty()) {
    summary["initial_contrastive"] = r.history.front().contrastive;
    summary["final_contrastive"] = r.history.back().contrastive;
  }
  return summary;
}

void write_table(const std::string& header, const Matrix& m, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os << header << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << "\n";
  }
}

void write_arm(const ArmReport& arm, const fs::path& dir) {
  fs::create_directories(dir);
  save_params(arm.training.params, dir / "params");
  save_history(arm.training.history, dir / "history.csv");
  save_quality_report(arm.test_report, dir / "report.csv");
  save_matrix(RepresentationMatrix(arm.test_h), dir / "reps.repb");

  LabelSet labels;
  labels.class_labels = arm.test_labels;
  labels.predicted_labels = arm.test_eval.predicted;
  for (std::size_t i = 0; i < arm.test_labels.size(); ++i) labels.sample_ids.push_back(arm.test_report.records[i].sample_id);
  save_labels(labels, dir / "labels.csv");

  write_benchmark_csv(arm.benchmark, dir / "benchmark.csv");
  write_class_profiles_csv(arm.profiles, dir / "class_profiles.csv");
  if (!arm.profiles.empty()) {
    const Matrix sorted = sorted_feature_profile(arm.profiles);
    Matrix with_id(sorted.rows(), sorted.cols() + 1);
    for (Eigen::Index i = 0; i < sorted.rows(); ++i) {
      with_id(i, 0) = arm.profiles[static_cast<std::size_t>(i)].class_id;
      with_id.row(i).tail(sorted.cols()) = sorted.row(i);
    }
    std::string header = "class_id";
    for (Eigen::Index j = 0; j < sorted.cols(); ++j) header += ",rank" + std::to_string(j);
    write_table(header, with_id, dir / "sorted_profile.csv");
  }
  write_scatter_csv(arm.test_report, arm.test_eval.correct, dir / "scatter.csv");

  Matrix sparsity(arm.test_sparsity.size(), 3);
  for (Eigen::Index i = 0; i < sparsity.rows(); ++i)
    sparsity.row(i) << std::stod(arm.test_report.records[static_cast<std::size_t>(i)].sample_id),
        (arm.test_eval.correct[static_cast<std::size_t>(i)] ? 1.0 : 0.0), arm.test_sparsity[i];
  write_table("sample_id,correct,exact_sparsity", sparsity, dir / "sparsity.csv");
}

json run_compare(const json& opts) {
  const ExperimentConfig exp = experiment_from(opts.at("config_base"));
  const ExperimentConfig reg = experiment_from(opts.at("config_reg"));
  const fs::path out = opts.at("out").get<std::string>();
  std::vector<fs::path> inputs;
  for (const char* key : {"config_base_path", "config_reg_path"})
    if (!opts.at(key).get<std::string>().empty()) inputs.emplace_back(opts.at(key).get<std::string>());
  start_manifest("compare", opts, exp.seed, inputs, {"comparison.json", "baseline", "regularized"});

  const SyntheticDataset ds = generate_dataset(exp.data);
  const ComparisonReport report = ab_compare(ds, exp.loss, reg.loss, exp);
  write_arm(report.baseline, out / "baseline");
  write_arm(report.regularized, out / "regularized");
  save_dataset(ds, out / "dataset");
  const json summary = comparison_summary(report);
  write_json(summary, out / "comparison.json");
  return summary;
}

json run_saliency(const json& opts) {
  const fs::path params_path = opts.at("params").get<std::string>();
  const fs::path dataset_path = opts.at("dataset").get<std::string>();
  const std::string labels_path = opts.at("labels").get<std::string>();
  const fs::path out = opts.at("out").get<std::string>();
  std::vector<fs::path> inputs{params_path, dataset_path};
  if (!labels_path.empty()) inputs.emplace_back(labels_path);
  start_manifest("saliency", opts, 0, inputs, {"saliency_*.csv", "saliency_*.pgm"});

  const EncoderParams params = load_params(params_path);
  const SyntheticDataset ds = load_dataset(dataset_path);
  if (ds.dim() != params.input_size())
    throw Error(ErrorCode::ShapeMismatch, "dataset dimension does not match the encoder input");

  std::vector<bool> correct(static_cast<std::size_t>(ds.size()), true);
  if (!labels_path.empty()) {
    const LabelSet labels = load_labels(labels_path);
    labels.validate(static_cast<std::size_t>(ds.size()));
    correct = labels.resolved_correctness();
  }
  std::optional<std::vector<ClassProfile>> profiles;

  json maps = json::array();
  for (const long sample : opts.at("samples").get<std::vector<long>>()) {
    if (sample < 0 || sample >= ds.size())
      throw Error(ErrorCode::IndexOutOfRange, "sample " + std::to_string(sample) + " outside dataset of size " +
                                                  std::to_string(ds.size()));
    Eigen::Index feature = opts.at("feature").get<long>();
    if (opts.at("dominant").get<bool>()) {
      if (!profiles) {
        LabelSet labels;
        labels.class_labels = ds.labels;
        labels.correctness = correct;
        profiles = class_profiles(RepresentationMatrix(encode(params, ds.samples).h), labels);
      }
      const int cls = ds.labels[static_cast<std::size_t>(sample)];
      const auto it = std::find_if(profiles->begin(), profiles->end(),
                                   [cls](const ClassProfile& p) { return p.class_id == cls; });
      feature = dominant_feature_index(*it);
    }
    SaliencyMap map = normalize_saliency(feature_gradient(params, ds.samples.row(sample).transpose(), feature));
    map.feature_index = feature;
    map.sample_id = std::to_string(sample);
    const std::string stem = saliency_stem(map);
    write_saliency_csv(map, out / (stem + ".csv"));
    const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(map.values.size()))));
    if (side * side == map.values.size()) write_saliency_pgm(map, out / (stem + ".pgm"));
    maps.push_back({{"sample", sample}, {"feature", feature}, {"csv", (out / (stem + ".csv")).string()}});
  }
  return {{"maps", maps}};
}

Runner runner_for(const std::string& command) {
  if (command == "metrics") return run_metrics;
  if (command == "curves") return run_curves;
  if (command == "train") return run_train;
  if (command == "compare") return run_compare;
  if (command == "saliency") return run_saliency;
  throw Error(ErrorCode::InvalidConfig, "unknown command '" + command + "'");
}

json run_replay(const json& opts) {
  const RunManifest m = read_manifest(opts.at("manifest").get<std::string>());
  for (const auto& [path, digest] : m.inputs)
    if (file_sha256(path) != digest) throw Error(ErrorCode::ParseError, "input changed since the run: " + path);
  json replay_opts = m.config;
  if (!opts.at("out").get<std::string>().empty()) replay_opts["out"] = opts.at("out");
  json summary = runner_for(m.command)(replay_opts);
  summary["replayed"] = m.command;
  return summary;
}

int finish(const std::string& command, Runner run, const json& opts) {
  try {
    json summary = run(opts);
    summary["command"] = command;
    summary["status"] = "ok";
    std::cout << summary.dump() << "\n";
    return 0;
  } catch (const NonFiniteGradientError& e) {
    std::cerr << "repscore " << command << ": " << e.what() << "\n";
    std::cout << json{{"command", command}, {"status", "error"}, {"error", to_string(e.code())}, {"step", e.step()}}.dump()
              << "\n";
    return exit_code(e.code());
  } catch (const Error& e) {
    std::cerr << "repscore " << command << ": " << e.what() << "\n";
    std::cout << json{{"command", command}, {"status", "error"}, {"error", to_string(e.code())}}.dump() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "repscore " << command << ": " << e.what() << "\n";
    std::cout << json{{"command", command}, {"status", "error"}, {"error", "internal"}}.dump() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representation quality scoring and regularized contrastive training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string reps, report, labels, metric = "all", out, config, config_base, config_reg, params, dataset,
                                    manifest;
  double eta = kDefaultEta;
  bool regularized = true, dominant = false;
  std::optional<std::uint64_t> seed;
  std::vector<long> samples;
  long feature = -1;

  auto* metrics = app.add_subcommand("metrics", "Per-sample quality metrics of a representation matrix");
  metrics->add_option("reps", reps, "Representation matrix (.csv or .repb)")->required();
  metrics->add_option("--eta", eta, "Soft-sparsity threshold");
  metrics->add_option("--out", out, "Output directory")->required();

  auto* curves = app.add_subcommand("curves", "ROC/PR curves of metrics against correctness");
  curves->add_option("--report", report, "Quality report CSV")->required();
  curves->add_option("--labels", labels, "Labels CSV with predicted labels")->required();
  curves->add_option("--metric", metric, "Metric name or 'all'");
  curves->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Contrastive training on the synthetic dataset");
  train->add_option("--config", config, "Experiment config JSON (defaults when omitted)");
  train->add_option("--regularized", regularized, "Keep the regularizer weights from the config");
  train->add_option("--seed", seed, "Seed for every random stream");
  train->add_option("--out", out, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Baseline versus regularized training from one initialization");
  compare->add_option("--config-base", config_base, "Baseline experiment config JSON");
  compare->add_option("--config-reg", config_reg, "Regularized experiment config JSON");
  compare->add_option("--seed", seed, "Seed for every random stream");
  compare->add_option("--out", out, "Output directory")->required();

  auto* saliency = app.add_subcommand("saliency", "Input-gradient maps of representation features");
  saliency->add_option("--params", params, "Parameter directory")->required();
  saliency->add_option("--dataset", dataset, "Dataset directory")->required();
  saliency->add_option("--sample", samples, "Dataset row index")->required();
  auto* feature_opt = saliency->add_option("--feature", feature, "Representation feature index");
  auto* dominant_opt = saliency->add_flag("--dominant", dominant, "Use the dominant feature of the sample's class");
  saliency->add_option("--labels", labels, "Labels aligned with the dataset rows, for the correct subset");
  saliency->add_option("--out", out, "Output directory")->required();
  feature_opt->excludes(dominant_opt);

  auto* replay = app.add_subcommand("replay", "Re-run a recorded manifest");
  replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out, "Write to another directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*metrics) return finish("metrics", run_metrics, {{"reps", reps}, {"eta", eta}, {"out", out}});
  if (*curves)
    return finish("curves", run_curves, {{"report", report}, {"labels", labels}, {"metric", metric}, {"out", out}});
  if (*saliency) {
    if (!dominant && feature < 0) {
      std::cerr << "repscore saliency: one of --feature or --dominant is required\n";
      return 2;
    }
    return finish("saliency", run_saliency,
                  {{"params", params},
                   {"dataset", dataset},
                   {"samples", samples},
                   {"feature", feature},
                   {"dominant", dominant},
                   {"labels", labels},
                   {"out", out}});
  }
  if (*replay) return finish("replay", run_replay, {{"manifest", manifest}, {"out", out}});

  // train and compare record fully resolved configs in the manifest.
  const auto resolve = [&](const std::string& path, const char* command) -> std::optional<json> {
    try {
      ExperimentConfig exp = load_experiment(path);
      if (seed) {
        exp.seed = *seed;
        exp.resolve_seeds();
      }
      return json(exp);
    } catch (const Error& e) {
      std::cerr << "repscore " << command << ": " << e.what() << "\n";
      std::cout << json{{"command", command}, {"status", "error"}, {"error", to_string(e.code())}}.dump() << "\n";
      return std::nullopt;
    }
  };
  if (*train) {
    auto exp = resolve(config, "train");
    if (!exp) return 2;
    if (!regularized) {
      (*exp)["loss"]["lambda1"] = 0.0;
      (*exp)["loss"]["lambda2"] = 0.0;
    }
    return finish("train", run_train, {{"config", *exp}, {"config_path", config}, {"out", out}});
  }
  auto base = resolve(config_base, "compare");
  auto reg = resolve(config_reg, "compare");
  if (!base || !reg) return 2;
  if (config_base.empty()) {
    (*base)["loss"]["lambda1"] = 0.0;
    (*base)["loss"]["lambda2"] = 0.0;
  }
  return finish("compare", run_compare,
                {{"config_base", *base},
                 {"config_reg", *reg},
                 {"config_base_path", config_base},
                 {"config_reg_path", config_reg},
                 {"out", out}});
}
