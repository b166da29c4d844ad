#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "ecranno/errors.h"
#include "ecranno/workflow.h"
#include "support/synthetic.h"

using namespace ecranno;
using ecranno::testing::MakeMention;
using ecranno::testing::Rng;

namespace {

Mention M(const std::string &id) {
  return MakeMention(id, "d", "t", {"x"}, {"y"}, 0, std::nullopt);
}

// Applies f to every score of the wrapped scorer.
class Transformed : public PairwiseScorer {
 public:
  Transformed(const PairwiseScorer &base, double (*f)(double)) : base_(base), f_(f) {}
  double Score(const Mention &a, const Mention &b) const override {
    return f_(base_.Score(a, b));
  }
  std::string name() const override { return "transformed"; }

 private:
  const PairwiseScorer &base_;
  double (*f_)(double);
};

std::vector<RankedCandidate> Ranked(size_t n) {
  std::vector<RankedCandidate> out;
  for (size_t i = 0; i < n; ++i) {
    out.push_back({"c" + std::to_string(i + 1), 1.0 - 0.01 * static_cast<double>(i),
                   static_cast<int64_t>(i + 1), static_cast<int64_t>(i + 1)});
  }
  return out;
}

}  // namespace

TEST_CASE("rank a single candidate") {
  std::vector<Mention> ms{M("t"), M("a")};
  MentionIndex index = BuildMentionIndex(ms);
  ClusterStore store("t");
  store.CreateSingleton(ms[1]);
  auto ranked = RankCandidates(ms[0], store.clusters(), index, RandomScorer(3));
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].rank == 1);
}

TEST_CASE("rank by mean score") {
  std::vector<Mention> ms{M("t"), M("a"), M("b"), M("c")};
  auto matrix = std::make_shared<ScoreMatrix>();
  matrix->Set("t", "a", 0.9);
  matrix->Set("t", "b", 0.4);
  matrix->Set("t", "c", 0.7);
  MentionIndex index = BuildMentionIndex(ms);
  ClusterStore store("t");
  for (int i = 1; i <= 3; ++i) store.CreateSingleton(ms[static_cast<size_t>(i)]);
  auto ranked = RankCandidates(ms[0], store.clusters(), index, MatrixScorer(matrix));
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].score == 0.9);
  CHECK(ranked[1].score == 0.7);
  CHECK(ranked[2].score == 0.4);
  CHECK(ranked[2].rank == 3);

  SUBCASE("ties go to the older cluster") {
    matrix->Set("t", "d", 0.9);
    ms.push_back(M("d"));
    MentionIndex idx = BuildMentionIndex(ms);
    ClusterStore s2("t");
    s2.CreateSingleton(ms[4]);  // c1 holds d
    s2.CreateSingleton(ms[1]);  // c2 holds a
    auto r = RankCandidates(ms[0], s2.clusters(), idx, MatrixScorer(matrix));
    CHECK(r[0].cluster_id == "c1");
    CHECK(r[1].cluster_id == "c2");
  }

  SUBCASE("scorer misses propagate with the pair") {
    ms.push_back(M("e"));
    MentionIndex idx = BuildMentionIndex(ms);
    ClusterStore s2("t");
    s2.CreateSingleton(ms[4]);
    CHECK_THROWS_WITH_AS(RankCandidates(ms[0], s2.clusters(), idx, MatrixScorer(matrix)),
                         doctest::Contains("(t, e)"), ScoreLookupError);
  }
}

TEST_CASE("ranking matches a brute-force recompute") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<Mention> ms;
    for (int i = 0; i < 40; ++i) {
      std::vector<std::string> trig{testing::Word("v", rng.Below(4))};
      std::vector<std::string> ctx;
      for (int w = 0; w < 5; ++w) ctx.push_back(testing::Word("w", rng.Below(12)));
      ms.push_back(MakeMention("m" + std::to_string(i), "d", "t", trig, ctx, 0, std::nullopt));
    }
    MentionIndex index = BuildMentionIndex(ms);
    ClusterStore store("t");
    size_t next = 1;
    for (int c = 0; c < 8; ++c) {
      size_t size = 1 + rng.Below(4);
      std::string id = store.CreateSingleton(ms[next++]);
      for (size_t j = 1; j < size; ++j) store.Merge(ms[next++], id);
    }
    LemmaScorer lemma({0.7});
    auto ranked = RankCandidates(ms[0], store.clusters(), index, lemma);

    // Oracle: recompute each mean, then selection-sort by (-mean, seq).
    std::vector<std::pair<double, int64_t>> expected;
    for (const Cluster &c : store.clusters()) {
      double total = 0;
      for (const std::string &id : c.mention_ids) {
        total += LemmaScore(ms[0], *index.at(id), {0.7});
      }
      expected.emplace_back(total / static_cast<double>(c.mention_ids.size()), c.created_seq);
    }
    for (size_t i = 0; i < expected.size(); ++i) {
      size_t best = i;
      for (size_t j = i + 1; j < expected.size(); ++j) {
        if (expected[j].first > expected[best].first ||
            (expected[j].first == expected[best].first &&
             expected[j].second < expected[best].second)) {
          best = j;
        }
      }
      std::swap(expected[i], expected[best]);
    }
    REQUIRE(ranked.size() == expected.size());
    for (size_t i = 0; i < ranked.size(); ++i) {
      CHECK(ranked[i].created_seq == expected[i].second);
      CHECK(ranked[i].score == expected[i].first);
      CHECK(ranked[i].rank == static_cast<int64_t>(i + 1));
    }

    // Permutation of the candidate list does not change the ranking.
    std::vector<Cluster> shuffled = store.clusters();
    rng.Shuffle(shuffled);
    CHECK(RankCandidates(ms[0], shuffled, index, lemma) == ranked);

    // Power-of-two scaling keeps every mean's order exactly.
    Transformed scaled(lemma, [](double x) { return 4.0 * x; });
    auto r2 = RankCandidates(ms[0], store.clusters(), index, scaled);
    for (size_t i = 0; i < ranked.size(); ++i) CHECK(r2[i].cluster_id == ranked[i].cluster_id);
  }
}

TEST_CASE("any increasing transform preserves the order of singleton clusters") {
  Rng rng(4);
  std::vector<Mention> ms;
  for (int i = 0; i < 30; ++i) ms.push_back(M("m" + std::to_string(i)));
  MentionIndex index = BuildMentionIndex(ms);
  ClusterStore store("t");
  for (size_t i = 1; i < ms.size(); ++i) store.CreateSingleton(ms[i]);
  RandomScorer base(99);
  auto ranked = RankCandidates(ms[0], store.clusters(), index, base);
  for (auto f : {+[](double x) { return std::exp(5 * x); },
                 +[](double x) { return x * x * x - 2; },
                 +[](double x) { return std::log1p(x); }}) {
    Transformed t(base, f);
    auto r = RankCandidates(ms[0], store.clusters(), index, t);
    for (size_t i = 0; i < ranked.size(); ++i) CHECK(r[i].cluster_id == ranked[i].cluster_id);
  }
}

TEST_CASE("prune to top k") {
  PruneConfig three{3.0, 1};
  for (uint64_t draw = 0; draw < 50; ++draw) {
    CHECK(PruneTopK(Ranked(5), three, draw).size() == 3);
  }
  CHECK(PruneTopK(Ranked(2), {2.5, 1}, 0).size() == 2);
  CHECK(PruneTopK(Ranked(0), {2.5, 1}, 0).empty());
  CHECK(PresentedCount(10, {1e18, 1}, 0) == 10);
  CHECK_THROWS_AS(PruneTopK(Ranked(3), {0.5, 1}, 0), ValidationError);
}

TEST_CASE("fractional k presents one extra candidate with the fractional probability") {
  const int draws = 10000;
  size_t total = 0;
  PruneConfig cfg{2.5, 2024};
  for (int i = 0; i < draws; ++i) total += PruneTopK(Ranked(10), cfg, i).size();
  double mean = static_cast<double>(total) / draws;
  CHECK(mean >= 2.48);
  CHECK(mean <= 2.52);

  size_t extra = 0;
  PruneConfig quarter{3.25, 7};
  for (int i = 0; i < draws; ++i) {
    size_t n = PresentedCount(10, quarter, i);
    CHECK((n == 3 || n == 4));
    extra += n - 3;
  }
  CHECK(std::abs(static_cast<double>(extra) / draws - 0.25) < 0.02);
}

TEST_CASE("pruning is a deterministic prefix") {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    size_t n = rng.Below(15);
    PruneConfig cfg{1.0 + 10 * rng.Unit(), rng.Next()};
    uint64_t draw = rng.Next();
    auto ranked = Ranked(n);
    auto pruned = PruneTopK(ranked, cfg, draw);
    REQUIRE(pruned.size() <= ranked.size());
    for (size_t i = 0; i < pruned.size(); ++i) CHECK(pruned[i] == ranked[i]);
    CHECK(PruneTopK(ranked, cfg, draw) == pruned);
    size_t floor_k = static_cast<size_t>(std::floor(cfg.k));
    CHECK(pruned.size() >= std::min(floor_k, n));
    CHECK(pruned.size() <= std::min(floor_k + 1, n));
  }
  // Integer k is a plain truncation regardless of seed and draw.
  for (uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(PruneTopK(Ranked(9), {4.0, seed}, seed * 31).size() == 4);
  }
}

TEST_CASE("review offers candidates one at a time") {
  Mention m1 = M("m1");
  std::vector<RankedCandidate> presented{
      {"m2-cluster", 0.8, 1, 1}, {"m4-cluster", 0.7, 2, 3}, {"m*-cluster", 0.6, 3, 2}};
  int asked = 0;
  Decision d = Review(m1, presented, [&](const RankedCandidate &c) {
    ++asked;
    return c.cluster_id == "m4-cluster";
  });
  CHECK(d.kind == DecisionKind::kAccept);
  CHECK(d.cluster_id == "m4-cluster");
  CHECK(d.reviewed_count == 2);
  CHECK(asked == 2);  // m*-cluster is skipped
  CHECK_NOTHROW(ValidateDecision(d, presented));

  Decision first = Review(m1, presented, [](const RankedCandidate &) { return true; });
  CHECK(first.reviewed_count == 1);

  std::vector<RankedCandidate> four{
      {"a", 0.4, 1, 1}, {"b", 0.3, 2, 2}, {"c", 0.2, 3, 3}, {"d", 0.1, 4, 4}};
  Decision none = Review(m1, four, [](const RankedCandidate &) { return false; });
  CHECK(none.kind == DecisionKind::kNewCluster);
  CHECK(none.reviewed_count == 4);

  Decision empty = Review(m1, {}, [](const RankedCandidate &) { return true; });
  CHECK(empty.kind == DecisionKind::kNewCluster);
  CHECK(empty.reviewed_count == 0);
}

TEST_CASE("decision validation") {
  std::vector<RankedCandidate> presented{{"c1", 0.5, 1, 1}, {"c2", 0.4, 2, 2}};
  CHECK_THROWS_WITH_AS(ValidateDecision({"t", DecisionKind::kAccept, "c9", 1}, presented),
                       doctest::Contains("not presented"), ValidationError);
  CHECK_THROWS_WITH_AS(ValidateDecision({"t", DecisionKind::kAccept, "c2", 1}, presented),
                       doctest::Contains("does not match rank 2"), ValidationError);
  CHECK_THROWS_AS(ValidateDecision({"t", DecisionKind::kNewCluster, "", 1}, presented),
                  ValidationError);
  CHECK_NOTHROW(ValidateDecision({"t", DecisionKind::kNewCluster, "", 2}, presented));
  CHECK_THROWS_AS(ValidateDecision({"t", DecisionKind::kRepair, "c1", 2}, presented),
                  ValidationError);
}

TEST_CASE("apply decisions and replay the log") {
  ClusterStore store("t");
  Mention a = M("a"), b = M("b"), c = M("c");
  ApplyDecision(store, a, {"a", DecisionKind::kNewCluster, "", 0});
  ApplyDecision(store, b, {"b", DecisionKind::kNewCluster, "", 1});
  CHECK(store.clusters().size() == 2);
  ApplyDecision(store, c, {"c", DecisionKind::kAccept, "c2", 1});
  CHECK(store.ClusterOf("c") == "c2");
  CHECK_THROWS_AS(ApplyDecision(store, c, {"x", DecisionKind::kNewCluster, "", 0}),
                  ValidationError);

  // 30 random decisions through the live path, then a replay.
  std::vector<Mention> ms;
  for (int i = 0; i < 30; ++i) ms.push_back(M("m" + std::to_string(i)));
  MentionIndex index = BuildMentionIndex(ms);
  Rng rng(3);
  ClusterStore live("t");
  DecisionLog log;
  for (const Mention &m : ms) {
    std::vector<RankedCandidate> presented;
    for (const Cluster &cl : live.clusters()) {
      presented.push_back({cl.cluster_id, 0, static_cast<int64_t>(presented.size() + 1),
                           cl.created_seq});
    }
    Decision d;
    d.target_id = m.mention_id;
    if (!presented.empty() && rng.Unit() < 0.6) {
      const auto &pick = presented[rng.Below(presented.size())];
      d.kind = DecisionKind::kAccept;
      d.cluster_id = pick.cluster_id;
      d.reviewed_count = pick.rank;
    } else {
      d.kind = DecisionKind::kNewCluster;
      d.reviewed_count = static_cast<int64_t>(presented.size());
    }
    ApplyDecision(live, m, d, presented, &log, 1000 + log.size());
  }
  CHECK(log.size() == 30);

  std::stringstream buf;
  log.Write(buf);
  DecisionLog reread = DecisionLog::Read(buf);
  CHECK(reread.entries() == log.entries());

  StoreSet replayed = ReplayDecisions(reread.entries(), index);
  REQUIRE(replayed.count("t") == 1);
  CHECK(replayed.at("t") == live);
  replayed.at("t").Audit();
}

TEST_CASE("decision log parse errors carry the line") {
  std::istringstream in("{\"target_id\":\"a\",\"kind\":\"new_cluster\",\"reviewed_count\":0,"
                        "\"topic_id\":\"t\",\"presented\":[]}\n{\"target_id\":\"b\"}\n");
  CHECK_THROWS_WITH_AS(DecisionLog::Read(in), doctest::Contains("line 2"), ValidationError);
}
