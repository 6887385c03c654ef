#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "repscore/eval.hpp"
#include "repscore/exports.hpp"
#include "test_helpers.hpp"

using namespace repscore;

namespace {

Vector vec(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

// Random scores on a coarse grid so ties are common.
void random_case(std::mt19937_64& rng, std::size_t n, std::vector<double>& s, std::vector<bool>& pos) {
  std::uniform_int_distribution<int> grid(0, 20);
  std::bernoulli_distribution coin(0.6);
  s.clear();
  pos.clear();
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(grid(rng) / 10.0);
    pos.push_back(coin(rng));
  }
  pos[0] = true;
  pos[1] = false;
}

}  // namespace

TEST(Roc, PerfectSeparation) {
  const auto c = roc_curve(vec({0.9, 0.8, 0.2, 0.1}), {true, true, false, false});
  EXPECT_EQ(c.area, 1.0);
  EXPECT_EQ(c.points.front().x, 0.0);
  EXPECT_EQ(c.points.front().y, 0.0);
  EXPECT_EQ(c.points.back().x, 1.0);
  EXPECT_EQ(c.points.back().y, 1.0);
  EXPECT_EQ(c.n_positive, 2u);
  EXPECT_EQ(c.n_negative, 2u);
}

TEST(Roc, AllTiedIsHalf) {
  const auto c = roc_curve(vec({0.3, 0.3, 0.3, 0.3, 0.3}), {true, false, true, false, true});
  EXPECT_EQ(c.area, 0.5);
  EXPECT_EQ(c.points.size(), 2u);
}

TEST(Roc, OneClassOnly) {
  EXPECT_EQ(code_of([] { roc_curve(vec({1, 2}), {true, true}); }), ErrorCode::OneClassOnly);
  EXPECT_EQ(code_of([] { roc_curve(vec({1, 2}), {false, false}); }), ErrorCode::OneClassOnly);
}

TEST(Roc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(17);
  std::vector<double> s;
  std::vector<bool> pos;
  random_case(rng, 200, s, pos);
  const auto c = roc_curve(vec(s), pos);
  EXPECT_NEAR(c.area, oracle::pairwise_auroc(s, pos), 1e-9);
  for (std::size_t k = 1; k < c.points.size(); ++k) EXPECT_GE(c.points[k].x, c.points[k - 1].x);
}

TEST(Pr, PerfectSeparationAndAllTied) {
  EXPECT_EQ(pr_curve(vec({0.9, 0.8, 0.2, 0.1}), {true, true, false, false}).area, 1.0);
  EXPECT_EQ(pr_curve(vec({1, 1, 1, 1}), {true, false, true, false}).area, 0.5);
  EXPECT_EQ(code_of([] { pr_curve(vec({1, 2}), {false, false}); }), ErrorCode::NoPositives);
  // no negatives is fine for PR
  EXPECT_EQ(pr_curve(vec({1, 2}), {true, true}).area, 1.0);
}

TEST(Pr, MatchesEnumerationOracle) {
  std::mt19937_64 rng(18);
  std::vector<double> s;
  std::vector<bool> pos;
  random_case(rng, 200, s, pos);
  const auto c = pr_curve(vec(s), pos);
  EXPECT_NEAR(c.area, oracle::enumerated_auprc(s, pos), 1e-9);
  for (std::size_t k = 1; k < c.points.size(); ++k) EXPECT_GE(c.points[k].x, c.points[k - 1].x);
}

// Strictly increasing transforms leave both areas bit-identical; flipping
// labels mirrors AUROC when scores are untied; points stay in the unit square.
TEST(Curves, RankProperties) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 25; ++t) {
    std::vector<double> s;
    std::vector<bool> pos, neg;
    for (int i = 0; i < 120; ++i) {
      s.push_back(u(rng));
      pos.push_back(coin(rng));
    }
    pos[0] = true;
    pos[1] = false;
    for (bool p : pos) neg.push_back(!p);
    std::vector<double> ts;
    for (double x : s) ts.push_back(std::exp(3.0 * x) + 7.0);

    const auto roc = roc_curve(vec(s), pos);
    const auto pr = pr_curve(vec(s), pos);
    EXPECT_EQ(roc_curve(vec(ts), pos).area, roc.area);
    EXPECT_EQ(pr_curve(vec(ts), pos).area, pr.area);
    EXPECT_NEAR(roc_curve(vec(s), neg).area, 1.0 - roc.area, 1e-12);
    for (const auto* c : {&roc, &pr})
      for (const auto& p : c->points) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, 1.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LE(p.y, 1.0);
      }
    EXPECT_GE(pr.area, 0.0);
    EXPECT_LE(pr.area, 1.0);
  }
}

TEST(Benchmark, PerfectQScorePredictor) {
  QualityReport r;
  std::vector<bool> correct;
  for (int i = 0; i < 10; ++i) {
    const bool ok = i % 3 != 0;
    QualityRecord rec;
    rec.sample_id = std::to_string(i);
    rec.mean = i;
    rec.std_dev = 1.0;
    rec.l1_norm = 10 - i;
    rec.zscore_max = 1.0;
    rec.q_score = ok ? 1.0 : 0.0;
    r.records.push_back(rec);
    correct.push_back(ok);
  }
  // flagged rows are excluded, even when they would spoil the ranking
  QualityRecord bad;
  bad.flag = QualityFlag::Degenerate;
  r.records.push_back(bad);
  correct.push_back(false);

  const auto table = metric_benchmark(r, correct);
  ASSERT_EQ(table.size(), 6u);
  for (const auto& row : table) {
    EXPECT_EQ(row.n_used, 10u);
    if (row.metric == MetricId::QScore) {
      EXPECT_EQ(row.auroc, 1.0);
      EXPECT_EQ(row.auprc, 1.0);
    }
  }
  EXPECT_EQ(metric_name(table.back().metric), "q_score");
  const auto j = benchmark_to_json(table);
  EXPECT_EQ(j.size(), 6u);
  EXPECT_EQ(j[5]["metric"], "q_score");
  EXPECT_EQ(j[3]["orientation"], "lower");
}

TEST(Benchmark, OneClassOnly) {
  QualityReport r;
  for (int i = 0; i < 3; ++i) {
    QualityRecord rec;
    rec.q_score = i;
    rec.zscore_max = i;
    r.records.push_back(rec);
  }
  EXPECT_EQ(code_of([&] { metric_benchmark(r, {true, true, true}); }), ErrorCode::OneClassOnly);
}

TEST(Profiles, OneClassAllCorrect) {
  LabelSet labels;
  labels.class_labels = {0, 0};
  labels.correctness = std::vector<bool>{true, true};
  Matrix m(2, 3);
  m << 1, 2, 3, 1, 2, 3;
  const auto p = class_profiles(RepresentationMatrix(m), labels);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_FALSE(p[0].mean_incorrect.has_value());
  ASSERT_TRUE(p[0].mean_correct.has_value());
  EXPECT_EQ(*p[0].mean_correct, m.row(0).transpose());
  EXPECT_EQ(p[0].accuracy, 1.0);
}

TEST(Profiles, MissingCorrectness) {
  LabelSet labels;
  labels.class_labels = {0, 1};
  EXPECT_EQ(code_of([&] { class_profiles(RepresentationMatrix(Matrix::Ones(2, 2)), labels); }),
            ErrorCode::MissingCorrectness);
}

TEST(Profiles, MatchGroupByOracleAndSortByAccuracy) {
  const Matrix m = repscore::testing::random_matrix(300, 12, 21, 0.0, 1.0);
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> cls(0, 9);
  std::bernoulli_distribution coin(0.7);
  LabelSet labels;
  std::vector<bool> correct;
  for (int i = 0; i < 300; ++i) {
    labels.class_labels.push_back(i < 10 ? i : cls(rng));
    correct.push_back(coin(rng));
  }
  labels.correctness = correct;
  const auto profiles = class_profiles(RepresentationMatrix(m), labels);
  ASSERT_EQ(profiles.size(), 10u);
  for (std::size_t k = 1; k < profiles.size(); ++k) EXPECT_GE(profiles[k - 1].accuracy, profiles[k].accuracy);

  for (const auto& p : profiles) {
    for (int subset = 0; subset < 3; ++subset) {
      std::vector<double> sum(12, 0.0);
      int n = 0;
      for (int i = 0; i < 300; ++i) {
        if (labels.class_labels[static_cast<std::size_t>(i)] != p.class_id) continue;
        if (subset == 1 && !correct[static_cast<std::size_t>(i)]) continue;
        if (subset == 2 && correct[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < 12; ++j) sum[static_cast<std::size_t>(j)] += m(i, j);
        ++n;
      }
      const Vector* got = subset == 0 ? &p.mean_all : subset == 1 ? (p.mean_correct ? &*p.mean_correct : nullptr)
                                                                 : (p.mean_incorrect ? &*p.mean_incorrect : nullptr);
      if (n == 0) {
        EXPECT_EQ(got, nullptr);
        continue;
      }
      ASSERT_NE(got, nullptr);
      for (int j = 0; j < 12; ++j) EXPECT_NEAR((*got)[j], sum[static_cast<std::size_t>(j)] / n, 1e-12);
    }
  }
}

TEST(SortedProfile, SortsByMagnitude) {
  ClassProfile a;
  a.mean_all = Vector(3);
  a.mean_all << 3, 0, 5;
  ClassProfile z;
  z.mean_all = Vector::Zero(3);
  ClassProfile neg;
  neg.mean_all = Vector(3);
  neg.mean_all << 1, -4, 2;
  const Matrix s = sorted_feature_profile({a, z, neg});
  EXPECT_EQ(s.row(0), Eigen::RowVector3d(5, 3, 0));
  EXPECT_EQ(s.row(1), Eigen::RowVector3d(0, 0, 0));
  EXPECT_EQ(s.row(2), Eigen::RowVector3d(-4, 2, 1));
  EXPECT_EQ(code_of([] { sorted_feature_profile({}); }), ErrorCode::EmptyProfile);
}

TEST(SortedProfile, RowsNonIncreasingInMagnitude) {
  const Matrix m = repscore::testing::random_matrix(20, 16, 23, 0.0, 2.0);
  std::vector<ClassProfile> profiles(20);
  for (int i = 0; i < 20; ++i) profiles[static_cast<std::size_t>(i)].mean_all = m.row(i).transpose();
  const Matrix s = sorted_feature_profile(profiles);
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 1; j < s.cols(); ++j) EXPECT_GE(std::abs(s(i, j - 1)), std::abs(s(i, j)));
}

TEST(ExactSparsity, CountsZeros) {
  Matrix m(2, 4);
  m << 0, 0, 1, 1, 0.001, -0.001, 0, 2;
  const Vector s = exact_sparsity(RepresentationMatrix(m));
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[1], 0.25);
  EXPECT_EQ(exact_sparsity(RepresentationMatrix(m), 0.001)[1], 0.75);
}

TEST(Exports, CurveCsvAndSvg) {
  const auto dir = repscore::testing::scratch_dir("curve_export");
  const auto c = roc_curve(vec({0.9, 0.8, 0.2, 0.1}), {true, false, true, false});
  write_curve_csv(c, dir / "roc.csv");
  const std::string csv = repscore::testing::read_text(dir / "roc.csv");
  EXPECT_EQ(csv.substr(0, 8), "fpr,tpr\n");
  EXPECT_NE(csv.find("0,0\n"), std::string::npos);
  EXPECT_NE(csv.find("1,1\n"), std::string::npos);
  write_curves_svg({{"q_score", c}}, "ROC", dir / "roc.svg");
  const std::string svg = repscore::testing::read_text(dir / "roc.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}
