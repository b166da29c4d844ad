#ifndef ECRANNO_SIMULATOR_H_
#define ECRANNO_SIMULATOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecranno/corpus.h"
#include "ecranno/metrics.h"
#include "ecranno/scorers.h"
#include "ecranno/workflow.h"
#include "json.hpp"

namespace ecranno {

// Gold-driven annotation simulation: the reviewer is replaced by an oracle
// that accepts the highest-ranked presented cluster sharing the target's
// gold id.

struct SimulationOptions {
  TopicKey topic_key = TopicKey::kTopic;
  // On a miss, merge the target into its best-ranked gold cluster instead
  // of starting a new (fragment) cluster. The miss still costs every
  // presented candidate and is not a hit.
  bool oracle_repair = false;
};

// `topic` must be one topic in traversal order. `draw_offset` is the
// traversal position of topic[0] across the corpus; the fractional-k draw
// for topic[i] is keyed by draw_offset + i.
std::vector<TargetRecord> SimulateTopic(const std::vector<Mention> &topic,
                                        const PairwiseScorer &scorer,
                                        const PruneConfig &prune,
                                        const SimulationOptions &options = {},
                                        uint64_t draw_offset = 0,
                                        DecisionLog *log = nullptr,
                                        StoreSet *stores = nullptr);

struct RunResult {
  std::string scorer;
  double k = 0.0;
  std::optional<double> lambda;
  uint64_t seed = 0;
  bool oracle_repair = false;
  std::vector<TargetRecord> records;
  double recall = 1.0;
  int64_t total_comparisons = 0;

  bool operator==(const RunResult &other) const = default;
};

nlohmann::json RunResultToJson(const RunResult &result, bool with_records = true);

// Topics run independently in partition order; records are concatenated.
RunResult SimulateCorpus(const TopicPartition &partition,
                         const PairwiseScorer &scorer, const PruneConfig &prune,
                         const SimulationOptions &options = {},
                         DecisionLog *log = nullptr, StoreSet *stores = nullptr);

// One seeded run: builds the scorer for `seed`, caches its within-topic
// scores and simulates with PruneConfig{k, seed}.
RunResult RunSimulation(const TopicPartition &partition,
                        const ScorerFactory &factory, double k, uint64_t seed,
                        const SimulationOptions &options = {});

// Grid lo, lo + step, ..., up to hi inclusive (within 1e-9 relative slack).
std::vector<double> MakeGrid(double lo, double hi, double step);
// 2.0, 2.5, ..., 20.0.
std::vector<double> DefaultKGrid();

// For each k, `replicates` runs with seeds base_seed .. base_seed +
// replicates - 1; recall and comparisons are replicate means.
std::vector<CurvePoint> SweepK(const TopicPartition &partition,
                               const ScorerFactory &factory,
                               const std::vector<double> &k_grid,
                               int replicates, uint64_t base_seed,
                               const SimulationOptions &options = {});

struct LambdaCurve {
  double lambda = 0.0;
  double score = 0.0;  // normalized area under recall vs log(comparisons)
  std::vector<CurvePoint> points;
};

struct LambdaTuning {
  double lambda_star = 0.0;
  std::vector<LambdaCurve> curves;  // ascending lambda
};

// Trapezoidal area under recall as a function of log(comparisons) over the
// curve's own comparisons range, divided by that range. Comparisons below 1
// are clamped to 1. A curve with zero range scores its mean recall.
double CurveScore(const std::vector<CurvePoint> &points);

// Sweeps k for every lambda of the lemma or combined family and returns
// the best-scoring lambda; ties go to the smaller lambda.
LambdaTuning TuneLambda(const TopicPartition &dev, const ScorerFactory &family,
                        std::vector<double> lambda_grid,
                        const std::vector<double> &k_grid, int replicates,
                        uint64_t base_seed, const SimulationOptions &options = {});

nlohmann::json LambdaTuningToJson(const LambdaTuning &tuning);

}  // namespace ecranno

#endif  // ECRANNO_SIMULATOR_H_
