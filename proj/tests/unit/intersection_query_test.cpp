#include <gtest/gtest.h>

#include "json.hpp"

#include <filesystem>
#include <random>

#include "generators.hpp"
#include "setmlvis/intersection_query.hpp"
#include "temp_dir.hpp"

using namespace setmlvis;
namespace fs = std::filesystem;

namespace {

const fs::path kDesk = fs::path(SETMLVIS_FIXTURES) / "desk";
constexpr auto TP = MatchStatus::TruePositive;
constexpr auto FP = MatchStatus::FalsePositive;

struct Fixture {
  std::vector<AgreementCluster> clusters;
  std::vector<ClusterStatus> statuses;

  void add(std::vector<ModelIndex> sig, MatchStatus s) {
    const ClusterId id{std::uint32_t(clusters.size())};
    clusters.push_back({id, 0, {}, Signature(std::move(sig))});
    statuses.push_back({id, s, {}, {}, {}});
  }
};

std::vector<std::uint32_t> raw_ids(const std::vector<ClusterId>& ids) {
  std::vector<std::uint32_t> out;
  for (auto id : ids) out.push_back(raw(id));
  return out;
}

QuerySpec spec(std::vector<ModelState> states, StatusFilter f = StatusFilter::All) {
  QuerySpec s;
  s.states = std::move(states);
  s.status = f;
  return s;
}

constexpr auto N = ModelState::Neutral;
constexpr auto I = ModelState::Include;
constexpr auto X = ModelState::Exclude;

}  // namespace

TEST(Aggregate, HandTalliedSixClusters) {
  Fixture f;
  f.add({0, 1}, TP);
  f.add({0, 1}, FP);
  f.add({0}, TP);
  f.add({0, 1, 2}, TP);
  f.add({0}, FP);
  f.add({0, 1}, TP);
  auto bars = aggregate(f.clusters, f.statuses);
  ASSERT_EQ(bars.size(), 3u);
  EXPECT_EQ(bars[0].signature, Signature({0, 1}));
  EXPECT_EQ(bars[0].tp_count, 2u);
  EXPECT_EQ(bars[0].fp_count, 1u);
  EXPECT_EQ(raw_ids(bars[0].cluster_ids), (std::vector<std::uint32_t>{0, 1, 5}));
  EXPECT_EQ(bars[1].signature, Signature({0}));
  EXPECT_EQ(bars[1].total(), 2u);
  EXPECT_EQ(bars[2].signature, Signature({0, 1, 2}));
  EXPECT_EQ(bars[2].tp_count, 1u);
}

TEST(Aggregate, ExclusiveCountsOnly) {
  // A cluster seen by {A,B} does not count toward the {A} bar.
  Fixture f;
  f.add({0, 1}, TP);
  auto bars = aggregate(f.clusters, f.statuses);
  ASSERT_EQ(bars.size(), 1u);
  EXPECT_EQ(bars[0].signature, Signature({0, 1}));
}

TEST(Aggregate, EmptyInput) {
  EXPECT_TRUE(aggregate({}, {}).empty());
}

TEST(Aggregate, DeskFixtureAtDefaults) {
  SetArtifact a = gen::make_artifact(load_dataset(kDesk, "dog"), 0.3);
  auto view = recluster(a, EvalParams{});
  ASSERT_EQ(view.clusters.size(), 5u);
  auto bars = aggregate(view.clusters, view.statuses);
  ASSERT_EQ(bars.size(), 5u);
  std::vector<Signature> sigs;
  std::vector<MatchStatus> st;
  for (const auto& b : bars) {
    sigs.push_back(b.signature);
    st.push_back(b.tp_count ? TP : FP);
  }
  EXPECT_EQ(sigs, (std::vector<Signature>{Signature({0}), Signature({0, 1}), Signature({0, 1, 2}),
                                          Signature({0, 2}), Signature({1})}));
  EXPECT_EQ(st, (std::vector<MatchStatus>{TP, TP, TP, FP, TP}));
}

TEST(Query, IncludeAExcludeC) {
  Fixture f;
  f.add({0}, TP);
  f.add({0, 1}, FP);
  f.add({0, 2}, TP);
  f.add({1}, TP);
  auto ids = query(spec({I, N, X}), 3, f.clusters, f.statuses);
  EXPECT_EQ(raw_ids(ids), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(raw_ids(query(spec({I, N, X}, StatusFilter::TPOnly), 3, f.clusters, f.statuses)),
            (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(raw_ids(query(spec({N, N, N}, StatusFilter::FPOnly), 3, f.clusters, f.statuses)),
            (std::vector<std::uint32_t>{1}));
}

TEST(Query, DeskFixture) {
  SetArtifact a = gen::make_artifact(load_dataset(kDesk, "dog"), 0.3);
  auto view = recluster(a, EvalParams{});
  EXPECT_EQ(raw_ids(query(spec({I, N, X}), 3, view.clusters, view.statuses)),
            (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(raw_ids(query(spec({N, N, I}, StatusFilter::FPOnly), 3, view.clusters, view.statuses)),
            (std::vector<std::uint32_t>{3}));
}

TEST(Query, WrongArityRejected) {
  Fixture f;
  f.add({0}, TP);
  EXPECT_THROW(query(spec({I}), 3, f.clusters, f.statuses), QueryError);
}

TEST(Query, StatusFilterStrings) {
  StatusFilter s{};
  EXPECT_TRUE(parse_status_filter("tp", s));
  EXPECT_EQ(s, StatusFilter::TPOnly);
  EXPECT_TRUE(parse_status_filter("all", s));
  EXPECT_EQ(s, StatusFilter::All);
  EXPECT_FALSE(parse_status_filter("TP", s));
  EXPECT_STREQ(to_string(StatusFilter::FPOnly), "fp");
}

TEST(QueryProperty, AgreesWithBarsAndIsMonotone) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t models = 2 + rng() % 3;
    RawDataset d = gen::random_dataset(rng, models, 4 + rng() % 20, 1 + rng() % 3, 5);
    SetArtifact a = gen::make_artifact(std::move(d), 0.3);
    const EvalParams p{0.5, 0.0, 1.0};
    auto view = recluster(a, p);
    auto bars = aggregate(view.clusters, view.statuses);

    QuerySpec s;
    for (std::size_t m = 0; m < models; ++m) s.states.push_back(ModelState(rng() % 3));
    s.status = StatusFilter(rng() % 3);

    // oracle: union of the matching bars' ids, filtered per status
    std::vector<std::uint32_t> expected;
    for (const auto& bar : bars) {
      bool ok = true;
      for (std::size_t m = 0; m < models; ++m) {
        const bool has = bar.signature.contains(ModelIndex(m));
        if (s.states[m] == I && !has) ok = false;
        if (s.states[m] == X && has) ok = false;
      }
      if (!ok) continue;
      for (auto id : bar.cluster_ids) {
        const auto st = view.statuses[raw(id)].status;
        if (s.status == StatusFilter::TPOnly && st != TP) continue;
        if (s.status == StatusFilter::FPOnly && st != FP) continue;
        expected.push_back(raw(id));
      }
    }
    std::sort(expected.begin(), expected.end());
    auto got = query(s, models, view.clusters, view.statuses);
    ASSERT_EQ(raw_ids(got), expected) << "trial " << trial;

    // TP and FP partition All
    QuerySpec all = s, tp = s, fp = s;
    all.status = StatusFilter::All;
    tp.status = StatusFilter::TPOnly;
    fp.status = StatusFilter::FPOnly;
    auto r_all = raw_ids(query(all, models, view.clusters, view.statuses));
    auto r_tp = raw_ids(query(tp, models, view.clusters, view.statuses));
    auto r_fp = raw_ids(query(fp, models, view.clusters, view.statuses));
    std::vector<std::uint32_t> joined;
    std::merge(r_tp.begin(), r_tp.end(), r_fp.begin(), r_fp.end(), std::back_inserter(joined));
    EXPECT_EQ(joined, r_all);

    // turning a Neutral model into Include or Exclude only narrows
    for (std::size_t m = 0; m < models; ++m) {
      if (all.states[m] != N) continue;
      for (auto next : {I, X}) {
        QuerySpec narrower = all;
        narrower.states[m] = next;
        auto r = raw_ids(query(narrower, models, view.clusters, view.statuses));
        EXPECT_TRUE(std::includes(r_all.begin(), r_all.end(), r.begin(), r.end()));
      }
    }
  }
}

TEST(TagStoreTest, AssignIsIdempotentUnion) {
  TagStore store(load_dataset(kDesk, "dog").images);
  EXPECT_FALSE(store.dirty());
  const std::vector<std::string> first{"img1", "img3"};
  store.assign("Partial Detection", first);
  store.assign("Partial Detection", first);
  const std::vector<std::string> second{"img2"};
  store.assign("Partial Detection", second);
  EXPECT_TRUE(store.dirty());
  EXPECT_EQ(store.snapshot().at("Partial Detection"),
            (std::set<std::string>{"img1", "img2", "img3"}));
}

TEST(TagStoreTest, ErrorsApplyNothing) {
  TagStore store(load_dataset(kDesk, "dog").images);
  const std::vector<std::string> mixed{"img1", "nope"};
  EXPECT_THROW(store.assign("x", mixed), TagError);
  EXPECT_TRUE(store.snapshot().empty());
  const std::vector<std::string> one{"img1"};
  EXPECT_THROW(store.assign("", one), TagError);
  EXPECT_FALSE(store.dirty());
}

TEST(TagStoreTest, ExportReloadRoundTrip) {
  TempDir dir;
  const auto images = load_dataset(kDesk, "dog").images;
  TagStore store(images);
  const std::vector<std::string> a{"img3", "img1"}, b{"img2"};
  store.assign("Partial Detection", a);
  store.assign("occluded", b);
  store.export_to(dir / "tags.json");

  auto doc = nlohmann::json::parse(read_file(dir / "tags.json"));
  ASSERT_EQ(doc["Partial Detection"].size(), 2u);
  EXPECT_EQ(doc["Partial Detection"][0]["image_id"], "img1");
  EXPECT_EQ(doc["Partial Detection"][0]["file"], "img1.jpg");

  TagStore reloaded(images);
  reloaded.load_from(dir / "tags.json");
  EXPECT_EQ(reloaded.snapshot(), store.snapshot());
  EXPECT_EQ(reloaded.export_document(), store.export_document());
}

TEST(TagStoreTest, ImportRejectsUnknownImage) {
  TagStore store(load_dataset(kDesk, "dog").images);
  EXPECT_THROW(store.import_document(R"({"t": [{"image_id": "zzz", "file": "z.jpg"}]})"),
               TagError);
}

TEST(TagStoreTest, SidecarPath) {
  EXPECT_EQ(tag_sidecar_path("/x/desk.artifact"), fs::path("/x/desk.artifact.tags.json"));
}
