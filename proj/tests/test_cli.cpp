#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "repscore/dataset.hpp"
#include "repscore/encoder.hpp"
#include "repscore/repstore.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using namespace repscore;
using repscore::testing::read_text;
using repscore::testing::scratch_dir;
using repscore::testing::write_text;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("cd '") + dir.string() + "' && '" + REPSCORE_CLI_PATH + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  return r;
}

nlohmann::json summary(const CliRun& r) {
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1) << r.out;
  return nlohmann::json::parse(r.out);
}

const char* kSmallConfig = R"({
  "data": {"k_classes": 4, "n_per_class": 24, "dim": 16},
  "model": {"input": 16, "hidden": 24, "representation": 16, "head_hidden": 0, "projection": 8},
  "optim": {"steps": 30, "batch_size": 16},
  "probe": {"max_epochs": 200}
})";

double pairwise_auc(const std::vector<double>& score, const std::vector<bool>& pos) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i)
    for (std::size_t j = 0; j < score.size(); ++j)
      if (pos[i] && !pos[j]) {
        pairs += 1.0;
        wins += score[i] > score[j] ? 1.0 : score[i] == score[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

}  // namespace

TEST(Cli, MetricsWritesOneRowPerSample) {
  const fs::path dir = scratch_dir("cli_metrics");
  write_text(dir / "reps.csv", "0,0,3\n1,1,1\n");
  const CliRun r = cli(dir, "metrics reps.csv --out m");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = summary(r);
  EXPECT_EQ(s["status"], "ok");
  EXPECT_EQ(s["rows"], 2);
  EXPECT_EQ(s["flagged"], 1);

  std::istringstream report(read_text(dir / "m/report.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(report, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "sample_id,mean,std,soft_sparsity,l1_norm,zscore_max,q_score,flag");
  const auto first = split_csv_line(rows[1]);
  EXPECT_NEAR(parse_double(first[6]), std::sqrt(2.0) / 3.0, 1e-12);
  EXPECT_EQ(split_csv_line(rows[2]).back(), "degenerate");

  const auto manifest = nlohmann::json::parse(read_text(dir / "m/manifest.json"));
  EXPECT_EQ(manifest["command"], "metrics");
  EXPECT_EQ(manifest["inputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(manifest.contains("config"));
  EXPECT_TRUE(manifest.contains("seed"));
}

TEST(Cli, MetricsIsDeterministic) {
  const fs::path dir = scratch_dir("cli_metrics_det");
  save_raw_matrix(repscore::testing::random_matrix(50, 12, 4), dir / "reps.csv", MatrixFormat::Csv);
  ASSERT_EQ(cli(dir, "metrics reps.csv --out a").code, 0);
  ASSERT_EQ(cli(dir, "metrics reps.csv --out b").code, 0);
  EXPECT_EQ(read_text(dir / "a/report.csv"), read_text(dir / "b/report.csv"));
}

TEST(Cli, EmptyInputExitsWithTwo) {
  const fs::path dir = scratch_dir("cli_empty");
  write_text(dir / "empty.csv", "");
  const CliRun r = cli(dir, "metrics empty.csv --out m");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(summary(r)["status"], "error");
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MissingFileAndUnknownFlagExitWithTwo) {
  const fs::path dir = scratch_dir("cli_missing");
  EXPECT_EQ(cli(dir, "metrics nope.csv --out m").code, 2);
  EXPECT_EQ(cli(dir, "metrics nope.csv --bogus").code, 2);
  EXPECT_EQ(cli(dir, "--help").code, 0);
}

TEST(Cli, CurvesPerfectSeparation) {
  const fs::path dir = scratch_dir("cli_curves_perfect");
  // one spike over equal entries: q falls as the spike grows, correct rows get the small spikes
  write_text(dir / "reps.csv", "1,1,1,9\n1,1,1,5\n1,1,1,3\n1,1,1,2\n");
  write_text(dir / "labels.csv", "sample_id,class_label,predicted_label\n0,0,1\n1,0,1\n2,1,1\n3,1,1\n");
  ASSERT_EQ(cli(dir, "metrics reps.csv --out m").code, 0);
  const CliRun r = cli(dir, "curves --report m/report.csv --labels labels.csv --metric q_score --out c");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto auc = nlohmann::json::parse(read_text(dir / "c/auc.json"));
  EXPECT_DOUBLE_EQ(auc[0]["auroc"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(auc[0]["auprc"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir / "c/q_score_roc.csv"));
  EXPECT_TRUE(fs::exists(dir / "c/q_score_pr.csv"));
  EXPECT_TRUE(fs::exists(dir / "c/roc.svg"));
}

TEST(Cli, CurvesMatchPairwiseOracle) {
  const fs::path dir = scratch_dir("cli_curves_oracle");
  const Matrix reps = repscore::testing::random_matrix(200, 10, 21, 0.0, 1.0);
  save_raw_matrix(reps, dir / "reps.csv", MatrixFormat::Csv);
  std::mt19937_64 rng(5);
  std::ostringstream labels;
  labels << "sample_id,class_label,predicted_label\n";
  std::vector<bool> correct;
  std::vector<double> q;
  for (Eigen::Index i = 0; i < reps.rows(); ++i) {
    const bool ok = rng() % 3 != 0;
    correct.push_back(ok);
    labels << i << ",1," << (ok ? 1 : 0) << "\n";
    std::vector<double> v;
    for (Eigen::Index j = 0; j < reps.cols(); ++j) v.push_back(reps(i, j));
    q.push_back(oracle::zscore_of_max(v) / oracle::abs_sum(v));
  }
  write_text(dir / "labels.csv", labels.str());
  ASSERT_EQ(cli(dir, "metrics reps.csv --out m").code, 0);
  ASSERT_EQ(cli(dir, "curves --report m/report.csv --labels labels.csv --metric q_score --out c").code, 0);
  const auto auc = nlohmann::json::parse(read_text(dir / "c/auc.json"));
  EXPECT_NEAR(auc[0]["auroc"].get<double>(), pairwise_auc(q, correct), 1e-9);
  EXPECT_EQ(auc[0]["n_used"], 200);
}

TEST(Cli, CurvesErrors) {
  const fs::path dir = scratch_dir("cli_curves_errors");
  write_text(dir / "reps.csv", "1,1,1,2\n1,1,1,3\n");
  ASSERT_EQ(cli(dir, "metrics reps.csv --out m").code, 0);
  EXPECT_EQ(cli(dir, "curves --report m/report.csv --labels missing.csv --out c").code, 2);
  write_text(dir / "labels.csv", "sample_id,class_label,predicted_label\n0,1,1\n1,0,0\n");
  const CliRun r = cli(dir, "curves --report m/report.csv --labels labels.csv --out c");
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(summary(r)["error"], "OneClassOnly");
}

TEST(Cli, TrainZeroStepsKeepsInitialization) {
  const fs::path dir = scratch_dir("cli_train_zero");
  auto cfg = nlohmann::json::parse(kSmallConfig);
  cfg["optim"]["steps"] = 0;
  write_text(dir / "cfg.json", cfg.dump());
  ASSERT_EQ(cli(dir, "train --config cfg.json --seed 11 --out t").code, 0);
  const EncoderParams loaded = load_params(dir / "t/params");
  const EncoderParams init = init_encoder({16, 24, 16, 0, 8}, mix_seed(11, 1));
  EXPECT_EQ(flatten(loaded), flatten(init));
}

TEST(Cli, TrainIsDeterministicPerSeed) {
  const fs::path dir = scratch_dir("cli_train_det");
  write_text(dir / "cfg.json", kSmallConfig);
  ASSERT_EQ(cli(dir, "train --config cfg.json --seed 3 --out a").code, 0);
  ASSERT_EQ(cli(dir, "train --config cfg.json --seed 3 --out b").code, 0);
  ASSERT_EQ(cli(dir, "train --config cfg.json --seed 4 --out c").code, 0);
  for (const auto& entry : fs::directory_iterator(dir / "a/params")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(read_text(entry.path()), read_text(dir / "b/params" / name)) << name;
  }
  EXPECT_EQ(read_text(dir / "a/history.csv"), read_text(dir / "b/history.csv"));
  EXPECT_NE(read_text(dir / "a/history.csv"), read_text(dir / "c/history.csv"));
}

TEST(Cli, TrainBadConfigExitsWithTwo) {
  const fs::path dir = scratch_dir("cli_train_bad");
  write_text(dir / "cfg.json", "{\"data\":");
  EXPECT_EQ(cli(dir, "train --config cfg.json --out t").code, 2);
  write_text(dir / "cfg.json", R"({"optim": {"lr": -1}})");
  EXPECT_EQ(cli(dir, "train --config cfg.json --out t").code, 3);
}

TEST(Cli, TrainDivergenceExitsWithFiveAndStep) {
  const fs::path dir = scratch_dir("cli_train_diverge");
  auto cfg = nlohmann::json::parse(kSmallConfig);
  cfg["optim"]["lr"] = 1e300;
  write_text(dir / "cfg.json", cfg.dump());
  const CliRun r = cli(dir, "train --config cfg.json --out t");
  EXPECT_EQ(r.code, 5);
  const auto s = summary(r);
  EXPECT_EQ(s["error"], "NonFiniteGradient");
  ASSERT_TRUE(s.contains("step"));
  EXPECT_NE(r.err.find("step " + std::to_string(s["step"].get<int>())), std::string::npos) << r.err;
}

TEST(Cli, NullComparisonHasIdenticalArms) {
  const fs::path dir = scratch_dir("cli_compare_null");
  write_text(dir / "cfg.json", kSmallConfig);
  const CliRun r = cli(dir, "compare --config-base cfg.json --config-reg cfg.json --seed 2 --out c");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cmp = nlohmann::json::parse(read_text(dir / "c/comparison.json"));
  EXPECT_EQ(cmp["baseline"], cmp["regularized"]);
  EXPECT_DOUBLE_EQ(cmp["relative_accuracy_change"].get<double>(), 0.0);
  for (const char* f : {"report.csv", "reps.repb", "labels.csv", "sparsity.csv", "history.csv"})
    EXPECT_EQ(read_text(dir / "c/baseline" / f), read_text(dir / "c/regularized" / f)) << f;
}

TEST(Cli, SaliencyOfLinearEncoderIsNormalizedWeightRow) {
  const fs::path dir = scratch_dir("cli_saliency_linear");
  EncoderParams p = init_encoder({9, 0, 6, 0, 3}, 8);
  p.encoder[0].bias.setConstant(100.0);
  save_params(p, dir / "params");
  SyntheticDataset ds;
  ds.samples = repscore::testing::random_matrix(4, 9, 2, 0.0, 1.0);
  ds.labels = {0, 0, 1, 1};
  ds.k_classes = 2;
  save_dataset(ds, dir / "ds");

  const CliRun r = cli(dir, "saliency --params params --dataset ds --sample 1 --feature 4 --out s");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(read_text(dir / "s/saliency_s1_f4.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "index,value");
  const Vector w = p.encoder[0].weight.row(4).transpose();
  const double peak = w.cwiseAbs().maxCoeff();
  Eigen::Index j = 0;
  while (std::getline(csv, line)) {
    const auto cells = split_csv_line(line);
    EXPECT_EQ(std::stoi(cells[0]), j);
    EXPECT_EQ(parse_double(cells[1]), std::abs(w[j]) / peak);
    ++j;
  }
  EXPECT_EQ(j, 9);
  EXPECT_TRUE(fs::exists(dir / "s/saliency_s1_f4.pgm"));
}

TEST(Cli, SaliencyDominantMatchesScan) {
  const fs::path dir = scratch_dir("cli_saliency_dominant");
  const EncoderParams p = init_encoder({16, 12, 8, 0, 4}, 5);
  save_params(p, dir / "params");
  SyntheticDataset ds;
  ds.samples = repscore::testing::random_matrix(6, 16, 9, 0.0, 1.0);
  ds.labels = {0, 0, 0, 1, 1, 1};
  ds.k_classes = 2;
  save_dataset(ds, dir / "ds");

  const CliRun r = cli(dir, "saliency --params params --dataset ds --sample 4 --dominant --out s");
  ASSERT_EQ(r.code, 0) << r.err;
  const Matrix h = encode(p, ds.samples).h;
  const Vector class_mean = h.middleRows(3, 3).colwise().mean().transpose();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < class_mean.size(); ++k)
    if (std::abs(class_mean[k]) > std::abs(class_mean[best])) best = k;
  EXPECT_EQ(summary(r)["maps"][0]["feature"], best);
  EXPECT_TRUE(fs::exists(dir / ("s/saliency_s4_f" + std::to_string(best) + ".csv")));
}

TEST(Cli, SaliencyErrors) {
  const fs::path dir = scratch_dir("cli_saliency_errors");
  save_params(init_encoder({9, 0, 6, 0, 3}, 1), dir / "params");
  SyntheticDataset ds;
  ds.samples = repscore::testing::random_matrix(2, 9, 2, 0.0, 1.0);
  ds.labels = {0, 1};
  ds.k_classes = 2;
  save_dataset(ds, dir / "ds");
  const CliRun r = cli(dir, "saliency --params params --dataset ds --sample 0 --feature 6 --out s");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(summary(r)["error"], "IndexOutOfRange");
  EXPECT_EQ(cli(dir, "saliency --params params --dataset ds --sample 5 --feature 0 --out s").code, 3);
  EXPECT_NE(cli(dir, "saliency --params params --dataset ds --sample 0 --out s").code, 0);
}

TEST(Cli, ReplayReproducesOutputs) {
  const fs::path dir = scratch_dir("cli_replay");
  write_text(dir / "cfg.json", kSmallConfig);
  ASSERT_EQ(cli(dir, "train --config cfg.json --seed 9 --out t").code, 0);
  const CliRun r = cli(dir, "replay t/manifest.json --out t2");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& entry : fs::directory_iterator(dir / "t/params"))
    EXPECT_EQ(read_text(entry.path()), read_text(dir / "t2/params" / entry.path().filename()));
  EXPECT_EQ(read_text(dir / "t/history.csv"), read_text(dir / "t2/history.csv"));

  write_text(dir / "cfg.json", std::string(kSmallConfig) + "\n");
  EXPECT_EQ(cli(dir, "replay t/manifest.json --out t3").code, 2);
}
