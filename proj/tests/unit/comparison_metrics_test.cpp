#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "setmlvis/comparison_metrics.hpp"

using namespace setmlvis;

namespace {

Membership ids(std::initializer_list<std::uint32_t> v) {
  Membership out;
  for (auto x : v) out.push_back(ClusterId{x});
  return out;
}

Membership random_set(std::mt19937& rng, std::uint32_t universe) {
  Membership out;
  for (std::uint32_t i = 0; i < universe; ++i)
    if (rng() % 2) out.push_back(ClusterId{i});
  return out;
}

const EvalParams kParams{0.5, 0.7, 1.0};

}  // namespace

TEST(Jaccard, Examples) {
  // {1..4} vs {2..6}: shared 2,3,4 out of 6
  EXPECT_DOUBLE_EQ(jaccard(ids({1, 2, 3, 4}), ids({2, 3, 4, 5, 6})), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(ids({1, 2}), ids({1, 2})), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(ids({1, 2}), ids({3})), 0.0);
  EXPECT_DOUBLE_EQ(jaccard({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(ids({1}), {}), 0.0);
}

TEST(Tversky, ContainmentOfSubset) {
  Membership big, small;
  for (std::uint32_t i = 0; i < 100; ++i) big.push_back(ClusterId{i});
  for (std::uint32_t i = 0; i < 90; ++i) small.push_back(ClusterId{i});
  EXPECT_DOUBLE_EQ(tversky_containment(small, big), 1.0);
  EXPECT_DOUBLE_EQ(tversky_containment(big, small), 0.9);
  EXPECT_DOUBLE_EQ(jaccard(small, big), 0.9);
  EXPECT_DOUBLE_EQ(tversky_containment({}, big), 1.0);
}

TEST(Tversky, IdentitiesAndBounds) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto a = random_set(rng, 1 + rng() % 30);
    auto b = random_set(rng, 1 + rng() % 30);
    const double j = jaccard(a, b);
    EXPECT_NEAR(tversky(a, b, 1, 1), j, 1e-12);
    EXPECT_DOUBLE_EQ(j, jaccard(b, a));
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, 1.0);
    EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
    EXPECT_NEAR(tversky(a, b, 1, 0), tversky_containment(a, b), 1e-12);
    const double c = tversky_containment(a, b);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    // containment never falls below Jaccard
    EXPECT_GE(c + 1e-12, j);
  }
}

TEST(JaccardMatrix, MatchesCountingOracle) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t models = 2 + rng() % 3;
    SetArtifact a = gen::make_artifact(gen::random_dataset(rng, models, 2 + rng() % 25, 2), 0.3);
    auto view = recluster(a, kParams);
    auto m = jaccard_matrix(a, kParams);
    ASSERT_EQ(m.values.size(), models);
    for (std::size_t i = 0; i < models; ++i) {
      EXPECT_DOUBLE_EQ(m.values[i][i], 1.0);
      for (std::size_t j = 0; j < models; ++j) {
        EXPECT_NEAR(m.values[i][j], oracle::count_jaccard(view.clusters, ModelIndex(i), ModelIndex(j)),
                    1e-12);
        EXPECT_DOUBLE_EQ(m.values[i][j], m.values[j][i]);
      }
    }
  }
}

TEST(JaccardMatrix, DuplicatedModelIsIdentical) {
  std::mt19937 rng(4);
  RawDataset d = gen::random_dataset(rng, 2, 12, 2);
  // third model copies model 0 exactly
  std::vector<Detection> copies;
  for (const auto& det : d.detections)
    if (det.model == 0) copies.push_back(det);
  d.models.push_back("modelC");
  for (auto det : copies) {
    det.model = 2;
    det.id = DetectionId{std::uint32_t(d.detections.size())};
    d.detections.push_back(det);
  }
  SetArtifact a = gen::make_artifact(std::move(d), 0.3);
  auto m = jaccard_matrix(a, EvalParams{0.5, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(m.values[0][2], 1.0);
}

TEST(ThreeModels, JaccardSeparatesEqualPrecision) {
  SetArtifact a = gen::make_artifact(gen::three_model_dataset(), 0.3);
  auto m = jaccard_matrix(a, kParams);
  const std::size_t green = 0, pink = 1, yellow = 2;
  EXPECT_NEAR(m.values[yellow][green], 9.0 / 11.0, 1e-12);
  EXPECT_NEAR(m.values[pink][yellow], 1.0 / 19.0, 1e-12);
  EXPECT_NEAR(m.values[pink][green], 1.0 / 19.0, 1e-12);

  auto scores = model_scores(a, kParams);
  ASSERT_EQ(scores.size(), 3u);
  for (const auto& s : scores) {
    EXPECT_DOUBLE_EQ(s.precision, 0.5) << s.model_id;
    EXPECT_EQ(s.tp, 5u);
    EXPECT_EQ(s.fp, 5u);
    EXPECT_EQ(s.fn, 4u);
  }
}

TEST(ModelScores, PerfectHalfAndEmpty) {
  // slots 0..3 are objects; 4, 5 spurious
  SetArtifact a = gen::make_artifact(
      gen::slot_dataset({"perfect", "half", "silent"}, 6, 4, {{0, 1, 2, 3}, {0, 1, 4, 5}, {}}),
      0.3);
  auto s = model_scores(a, kParams);
  EXPECT_DOUBLE_EQ(s[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(s[0].recall, 1.0);
  EXPECT_DOUBLE_EQ(s[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(s[1].recall, 0.5);
  EXPECT_EQ(s[2].tp + s[2].fp, 0u);
  EXPECT_DOUBLE_EQ(s[2].precision, 0.0);
  EXPECT_DOUBLE_EQ(s[2].recall, 0.0);
  EXPECT_EQ(s[2].fn, 4u);
}

TEST(ModelScores, ConfidenceFilterApplies) {
  RawDataset d = gen::slot_dataset({"a", "b"}, 2, 2, {{0, 1}, {0}});
  d.detections[1].confidence = 0.3;
  auto s = model_scores(gen::make_artifact(std::move(d), 0.3), kParams);
  EXPECT_EQ(s[0].tp, 1u);
  EXPECT_EQ(s[0].fn, 1u);
}

TEST(ModelScores, MissingGroundTruth) {
  RawDataset d = gen::slot_dataset({"a", "b"}, 2, 0, {{0}, {1}});
  SetArtifact a = gen::make_artifact(std::move(d), 0.3);
  EXPECT_THROW(model_scores(a, kParams), MetricsError);
}

TEST(Memberships, FollowSignatures) {
  std::vector<AgreementCluster> clusters{
      {ClusterId{0}, 0, {}, Signature({0, 1})},
      {ClusterId{1}, 0, {}, Signature({1})},
  };
  auto m = memberships(clusters, 3);
  EXPECT_EQ(m[0], ids({0}));
  EXPECT_EQ(m[1], ids({0, 1}));
  EXPECT_TRUE(m[2].empty());
}
