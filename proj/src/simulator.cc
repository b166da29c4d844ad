#include "ecranno/simulator.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "ecranno/errors.h"

namespace ecranno {

using nlohmann::json;

std::vector<TargetRecord> SimulateTopic(const std::vector<Mention> &topic,
                                        const PairwiseScorer &scorer,
                                        const PruneConfig &prune,
                                        const SimulationOptions &options,
                                        uint64_t draw_offset, DecisionLog *log,
                                        StoreSet *stores) {
  ValidatePruneConfig(prune);
  RequireGoldLabels(topic);
  std::vector<TargetRecord> records;
  if (topic.empty()) return records;

  const std::string &topic_id = TopicOf(topic.front(), options.topic_key);
  ClusterStore store(topic_id);
  MentionIndex mentions = BuildMentionIndex(topic);

  std::unordered_map<std::string, std::string> cluster_gold;
  std::unordered_map<std::string, int64_t> clusters_per_gold;

  records.reserve(topic.size());
  for (size_t i = 0; i < topic.size(); ++i) {
    const Mention &target = topic[i];
    const std::string &gold = *target.gold_cluster_id;
    const std::vector<Cluster> &clusters =
        store.CandidatesFor(target, options.topic_key);

    auto same_gold = [&](const RankedCandidate &c) {
      return cluster_gold.at(c.cluster_id) == gold;
    };

    std::vector<RankedCandidate> ranked =
        RankCandidates(target, clusters, mentions, scorer);
    std::vector<RankedCandidate> presented =
        PruneTopK(ranked, prune, draw_offset + i);
    Decision decision = Review(target, presented, same_gold);

    TargetRecord record;
    record.target_id = target.mention_id;
    record.presented_count = static_cast<int64_t>(presented.size());
    record.had_coreferent_in_store = clusters_per_gold[gold] > 0;
    record.comparisons = decision.reviewed_count;
    if (decision.kind == DecisionKind::kAccept) {
      record.hit_rank = decision.reviewed_count;
    } else if (options.oracle_repair && record.had_coreferent_in_store) {
      auto best = std::find_if(ranked.begin(), ranked.end(), same_gold);
      decision.kind = DecisionKind::kRepair;
      decision.cluster_id = best->cluster_id;
    }
    records.push_back(std::move(record));

    std::string cluster_id = ApplyDecision(store, target, decision, presented, log);
    if (decision.kind == DecisionKind::kNewCluster) {
      cluster_gold.emplace(cluster_id, gold);
      ++clusters_per_gold[gold];
    }
  }

  if (stores != nullptr) {
    stores->insert_or_assign(topic_id, std::move(store));
  }
  return records;
}

json RunResultToJson(const RunResult &result, bool with_records) {
  json config{{"scorer", result.scorer},
              {"k", result.k},
              {"seed", result.seed},
              {"oracle_repair", result.oracle_repair}};
  config["lambda"] = result.lambda ? json(*result.lambda) : json(nullptr);
  json j{{"config", std::move(config)},
         {"recall", result.recall},
         {"total_comparisons", result.total_comparisons},
         {"targets", result.records.size()}};
  if (with_records) {
    json records = json::array();
    for (const TargetRecord &r : result.records) records.push_back(RecordToJson(r));
    j["records"] = std::move(records);
  }
  return j;
}

RunResult SimulateCorpus(const TopicPartition &partition,
                         const PairwiseScorer &scorer, const PruneConfig &prune,
                         const SimulationOptions &options, DecisionLog *log,
                         StoreSet *stores) {
  RunResult result;
  result.scorer = scorer.name();
  result.k = prune.k;
  result.seed = prune.seed;
  result.oracle_repair = options.oracle_repair;

  uint64_t offset = 0;
  for (const auto &[topic_id, mentions] : partition) {
    std::vector<TargetRecord> records =
        SimulateTopic(mentions, scorer, prune, options, offset, log, stores);
    offset += mentions.size();
    result.records.insert(result.records.end(),
                          std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));
  }
  result.recall = Recall(result.records);
  result.total_comparisons = Comparisons(result.records);
  return result;
}

namespace {

bool UsesLambda(ScorerKind kind) {
  return kind == ScorerKind::kLemma || kind == ScorerKind::kCombined;
}

}  // namespace

RunResult RunSimulation(const TopicPartition &partition,
                        const ScorerFactory &factory, double k, uint64_t seed,
                        const SimulationOptions &options) {
  std::unique_ptr<PairwiseScorer> scorer = factory.Make(seed);
  ScoreCache cache(partition, *scorer);
  RunResult result = SimulateCorpus(partition, cache, {k, seed}, options);
  if (UsesLambda(factory.config().kind)) result.lambda = factory.config().lambda;
  return result;
}

std::vector<double> MakeGrid(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw ValidationError("invalid grid " + FormatReal(lo) + ":" + FormatReal(hi) +
                          ":" + FormatReal(step));
  }
  const size_t n =
      static_cast<size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double v = lo + static_cast<double>(i) * step;
    grid.push_back(std::round(v * 1e9) / 1e9);
  }
  return grid;
}

std::vector<double> DefaultKGrid() { return MakeGrid(2.0, 20.0, 0.5); }

std::vector<CurvePoint> SweepK(const TopicPartition &partition,
                               const ScorerFactory &factory,
                               const std::vector<double> &k_grid, int replicates,
                               uint64_t base_seed,
                               const SimulationOptions &options) {
  if (k_grid.empty()) throw ValidationError("k grid is empty");
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  for (double k : k_grid) ValidatePruneConfig({k, 0});

  std::unique_ptr<PairwiseScorer> scorer;
  std::unique_ptr<ScoreCache> cache;
  std::vector<double> recall_sum(k_grid.size(), 0.0);
  std::vector<int64_t> comparison_sum(k_grid.size(), 0);

  for (int r = 0; r < replicates; ++r) {
    const uint64_t seed = base_seed + static_cast<uint64_t>(r);
    if (!cache || !factory.seed_independent()) {
      cache.reset();
      scorer = factory.Make(seed);
      cache = std::make_unique<ScoreCache>(partition, *scorer);
    }
    for (size_t i = 0; i < k_grid.size(); ++i) {
      RunResult run = SimulateCorpus(partition, *cache, {k_grid[i], seed}, options);
      recall_sum[i] += run.recall;
      comparison_sum[i] += run.total_comparisons;
    }
  }

  std::vector<CurvePoint> points;
  points.reserve(k_grid.size());
  for (size_t i = 0; i < k_grid.size(); ++i) {
    points.push_back({k_grid[i], recall_sum[i] / replicates,
                      static_cast<double>(comparison_sum[i]) / replicates,
                      replicates});
  }
  return points;
}

double CurveScore(const std::vector<CurvePoint> &points) {
  if (points.empty()) throw ValidationError("cannot score an empty curve");
  std::vector<std::pair<double, double>> xy;
  xy.reserve(points.size());
  for (const CurvePoint &p : points) {
    xy.emplace_back(std::log(std::max(p.comparisons, 1.0)), p.recall);
  }
  std::stable_sort(xy.begin(), xy.end(),
                   [](const auto &a, const auto &b) { return a.first < b.first; });
  const double span = xy.back().first - xy.front().first;
  if (span <= 0.0) {
    double sum = 0.0;
    for (const auto &[x, y] : xy) sum += y;
    return sum / static_cast<double>(xy.size());
  }
  double area = 0.0;
  for (size_t i = 1; i < xy.size(); ++i) {
    area += (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second) / 2;
  }
  return area / span;
}

LambdaTuning TuneLambda(const TopicPartition &dev, const ScorerFactory &family,
                        std::vector<double> lambda_grid,
                        const std::vector<double> &k_grid, int replicates,
                        uint64_t base_seed, const SimulationOptions &options) {
  if (!UsesLambda(family.config().kind)) {
    throw ValidationError("lambda tuning needs the lemma or combined scorer, got '" +
                          ScorerKindName(family.config().kind) + "'");
  }
  if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
  if (k_grid.empty()) throw ValidationError("k grid is empty");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end()),
                    lambda_grid.end());

  LambdaTuning tuning;
  double best = -1.0;
  for (double lambda : lambda_grid) {
    LambdaCurve curve;
    curve.lambda = lambda;
    curve.points = SweepK(dev, family.WithLambda(lambda), k_grid, replicates,
                          base_seed, options);
    curve.score = CurveScore(curve.points);
    if (curve.score > best) {
      best = curve.score;
      tuning.lambda_star = lambda;
    }
    tuning.curves.push_back(std::move(curve));
  }
  return tuning;
}

json LambdaTuningToJson(const LambdaTuning &tuning) {
  json curves = json::array();
  for (const LambdaCurve &c : tuning.curves) {
    json points = json::array();
    for (const CurvePoint &p : c.points) {
      points.push_back({{"k", p.k},
                        {"recall", p.recall},
                        {"comparisons", p.comparisons},
                        {"replicates", p.replicates}});
    }
    curves.push_back(
        {{"lambda", c.lambda}, {"score", c.score}, {"points", std::move(points)}});
  }
  return {{"lambda_star", tuning.lambda_star}, {"curves", std::move(curves)}};
}

}  // namespace ecranno
