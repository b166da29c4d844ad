#ifndef ECRANNO_TESTS_SUPPORT_FIXTURES_H_
#define ECRANNO_TESTS_SUPPORT_FIXTURES_H_

// Named corpora shared by the unit and acceptance tests.

#include <memory>
#include <string>
#include <vector>

#include "ecranno/corpus.h"
#include "ecranno/scorers.h"
#include "support/synthetic.h"

namespace ecranno::testing {

// Target m1 arrives last; the lemma scorer ranks its candidates m2, m4, m*
// and m1 corefers with m4, so m* is never looked at.
inline std::vector<Mention> WorkflowFixture() {
  return {
      MakeMention("m2", "d1", "t", {"attack"}, {"a", "b", "c"}, 0, "G2"),
      MakeMention("m*", "d2", "t", {"strike"}, {"q", "r"}, 0, "G*"),
      MakeMention("m4", "d3", "t", {"attack"}, {"x", "y", "z"}, 0, "G1"),
      MakeMention("m1", "d4", "t", {"attack"}, {"a", "b", "c"}, 0, "G1"),
  };
}

struct FixtureCorpus {
  std::string name;
  std::vector<Mention> mentions;
};

// Ten generated corpora from 20 to 500 mentions with mixed cluster sizes.
inline std::vector<FixtureCorpus> FixtureSuite() {
  struct Shape {
    size_t topics, per_topic, max_cluster;
    double singleton_rate;
  };
  const Shape shapes[] = {{1, 20, 4, 0.3},   {1, 35, 6, 0.5},  {2, 30, 3, 0.2},
                          {3, 30, 8, 0.4},   {3, 40, 5, 0.35}, {4, 45, 10, 0.6},
                          {4, 60, 6, 0.1},   {4, 80, 12, 0.35}, {5, 80, 6, 0.45},
                          {5, 100, 9, 0.3}};
  std::vector<FixtureCorpus> out;
  uint64_t seed = 1000;
  for (const Shape &s : shapes) {
    SyntheticSpec spec;
    spec.seed = ++seed;
    spec.topics = s.topics;
    spec.min_mentions = spec.max_mentions = s.per_topic;
    spec.max_cluster_size = s.max_cluster;
    spec.singleton_rate = s.singleton_rate;
    spec.docs_per_topic = 2 + s.per_topic / 10;
    out.push_back({"synthetic-" + std::to_string(s.topics * s.per_topic), GenerateCorpus(spec)});
  }
  return out;
}

// One factory per scorer family; the matrix families use synthetic score
// matrices over every within-topic pair.
struct NamedFactory {
  std::string name;
  ScorerFactory factory;
};

inline std::vector<NamedFactory> AllScorers(const std::vector<Mention> &mentions) {
  auto pair_scores = SyntheticMatrix(mentions, 7, 0.6);
  auto context_scores = SyntheticMatrix(mentions, 8, 0.3);
  ScorerConfig lemma{ScorerKind::kLemma};
  ScorerConfig matrix{ScorerKind::kMatrix};
  ScorerConfig combined{ScorerKind::kCombined};
  ScorerConfig random{ScorerKind::kRandom};
  return {{"lemma", ScorerFactory(lemma)},
          {"matrix", ScorerFactory(matrix, pair_scores)},
          {"combined", ScorerFactory(combined, pair_scores, context_scores)},
          {"random", ScorerFactory(random)}};
}

}  // namespace ecranno::testing

#endif  // ECRANNO_TESTS_SUPPORT_FIXTURES_H_
