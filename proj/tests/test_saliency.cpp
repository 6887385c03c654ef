#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "repscore/saliency.hpp"
#include "test_helpers.hpp"

using namespace repscore;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Every ReLU decision of the network on one input.
std::vector<bool> gate_pattern(const EncoderParams& p, const Vector& x) {
  const ForwardCache c = forward(p, x.transpose());
  std::vector<bool> g;
  for (std::size_t k = 0; k < p.encoder.size(); ++k)
    for (Eigen::Index u = 0; u < c.pre[k].cols(); ++u) g.push_back(c.pre[k](0, u) > 0.0);
  return g;
}

}  // namespace

TEST(Saliency, LinearLayerGivesWeightRow) {
  EncoderParams p = init_encoder({9, 0, 6, 0, 3}, 2);
  p.encoder[0].bias.setConstant(100.0);  // every unit active
  const Vector x = repscore::testing::random_matrix(1, 9, 3, 0, 1).row(0).transpose();
  for (Eigen::Index k = 0; k < 6; ++k) {
    const Vector g = feature_gradient(p, x, k);
    EXPECT_EQ(g, p.encoder[0].weight.row(k).transpose());
    const SaliencyMap map = normalize_saliency(g);
    const Vector w = p.encoder[0].weight.row(k).transpose();
    double peak = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) peak = std::max(peak, std::abs(w[j]));
    for (Eigen::Index j = 0; j < w.size(); ++j) EXPECT_EQ(map.values[j], std::abs(w[j]) / peak);
  }
}

TEST(Saliency, DeadUnitHasZeroGradient) {
  EncoderParams p = init_encoder({9, 0, 6, 0, 3}, 4);
  p.encoder[0].bias[2] = -100.0;
  const Vector x = repscore::testing::random_matrix(1, 9, 5, 0, 1).row(0).transpose();
  EXPECT_TRUE(feature_gradient(p, x, 2).isZero(0));
  EXPECT_TRUE(normalize_saliency(feature_gradient(p, x, 2)).values.isZero(0));
}

TEST(Saliency, MatchesFiniteDifferencesAwayFromKinks) {
  const double step = 1e-5;
  int checked = 0, agreed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const EncoderParams p = init_encoder({16, 12, 8, 0, 4}, seed);
    const Vector x = repscore::testing::random_matrix(1, 16, seed + 50, 0, 1).row(0).transpose();
    const auto base_gates = gate_pattern(p, x);
    for (Eigen::Index k = 0; k < 8; ++k) {
      const Vector g = feature_gradient(p, x, k);
      for (Eigen::Index j = 0; j < 16; ++j) {
        Vector up = x, down = x;
        up[j] += step;
        down[j] -= step;
        if (gate_pattern(p, up) != base_gates || gate_pattern(p, down) != base_gates) continue;
        const double fd = (encode(p, up.transpose()).h(0, k) - encode(p, down.transpose()).h(0, k)) / (2 * step);
        ++checked;
        if (oracle::relative_error(g[j], fd, 1e-6) <= 1e-4) ++agreed;
      }
    }
  }
  ASSERT_GT(checked, 500);
  EXPECT_GE(static_cast<double>(agreed) / checked, 0.95);
}

TEST(Saliency, FeatureOutOfRange) {
  const EncoderParams p = init_encoder({4, 0, 3, 0, 2}, 1);
  try {
    feature_gradient(p, Vector::Ones(4), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
    EXPECT_EQ(exit_code(e.code()), 3);
  }
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_saliency(vec({-2, 1, 0})).values, vec({1, 0.5, 0}));
  EXPECT_EQ(normalize_saliency(Vector::Zero(4)).values, Vector::Zero(4));
}

TEST(Normalize, Properties) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    Vector raw(25);
    for (auto& v : raw) v = u(rng);
    const Vector once = normalize_saliency(raw).values;
    EXPECT_EQ(once.maxCoeff(), 1.0);
    EXPECT_GE(once.minCoeff(), 0.0);
    EXPECT_EQ(once.size(), raw.size());
    EXPECT_EQ(normalize_saliency(once).values, once);
    EXPECT_LE((normalize_saliency(7.5 * raw).values - once).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Dominant, ExamplesAndScan) {
  EXPECT_EQ(dominant_feature_index(vec({0, 7, 3})), 1);
  EXPECT_EQ(dominant_feature_index(vec({5, 5})), 0);
  EXPECT_THROW(dominant_feature_index(Vector()), Error);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    Vector v(32);
    for (auto& x : v) x = u(rng);
    Eigen::Index best = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (std::abs(v[j]) > std::abs(v[best])) best = j;
    EXPECT_EQ(dominant_feature_index(v), best);
  }
}

TEST(Dominant, UsesCorrectSubsetOfProfile) {
  ClassProfile p;
  p.mean_all = vec({9, 0, 0});
  p.mean_correct = vec({0, 0, 4});
  EXPECT_EQ(dominant_feature_index(p), 2);
  p.mean_correct.reset();
  try {
    dominant_feature_index(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyProfile);
  }
}

TEST(SaliencyOutput, PgmAndCsv) {
  const auto dir = repscore::testing::scratch_dir("saliency_out");
  SaliencyMap map = normalize_saliency(vec({0, 0.5, 1, 0.25}));
  map.feature_index = 3;
  map.sample_id = "12";
  EXPECT_EQ(saliency_stem(map), "saliency_s12_f3");
  write_saliency_pgm(map, dir / "m.pgm");
  const std::string pgm = repscore::testing::read_text(dir / "m.pgm");
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 4);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 0]), 0);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 1]), 128);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 2]), 255);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 3]), 64);
  write_saliency_csv(map, dir / "m.csv");
  EXPECT_EQ(repscore::testing::read_text(dir / "m.csv"), "index,value\n0,0\n1,0.5\n2,1\n3,0.25\n");
  map.values = Vector::Ones(5);
  EXPECT_THROW(write_saliency_pgm(map, dir / "bad.pgm"), Error);
}
