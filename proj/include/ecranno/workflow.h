#ifndef ECRANNO_WORKFLOW_H_
#define ECRANNO_WORKFLOW_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecranno/cluster_store.h"
#include "ecranno/corpus.h"
#include "ecranno/scorers.h"
#include "json.hpp"

namespace ecranno {

// The rank -> prune -> decide loop shared by the simulator and the live
// annotation service.

struct RankedCandidate {
  std::string cluster_id;
  double score = 0.0;  // mean pairwise score against the target
  int64_t rank = 0;    // 1-based
  int64_t created_seq = 0;

  bool operator==(const RankedCandidate &other) const = default;
};

struct PruneConfig {
  double k = 2.0;  // may be fractional; must be >= 1
  uint64_t seed = 0;
};

void ValidatePruneConfig(const PruneConfig &cfg);

using MentionIndex = std::unordered_map<std::string, const Mention *>;

// Pointers stay valid while `mentions` is alive and unmodified.
MentionIndex BuildMentionIndex(const std::vector<Mention> &mentions);

// Scores each cluster by the mean of scorer(target, m) over its members
// and sorts descending. Ties go to the older cluster (smaller created_seq),
// then the smaller cluster_id.
std::vector<RankedCandidate> RankCandidates(const Mention &target,
                                            const std::vector<Cluster> &clusters,
                                            const MentionIndex &mentions,
                                            const PairwiseScorer &scorer);

// How many of `available` ranked candidates are shown: floor(k), plus one
// more when the draw keyed by (seed, draw_index) falls below frac(k),
// capped at `available`.
size_t PresentedCount(size_t available, const PruneConfig &cfg,
                      uint64_t draw_index);

// The leading PresentedCount(...) entries of `ranked`.
std::vector<RankedCandidate> PruneTopK(const std::vector<RankedCandidate> &ranked,
                                       const PruneConfig &cfg,
                                       uint64_t draw_index);

enum class DecisionKind {
  kAccept,      // target joins a presented cluster
  kNewCluster,  // target starts its own cluster
  kRepair,      // simulator only: gold-forced merge into a pruned cluster
};

std::string DecisionKindName(DecisionKind kind);
DecisionKind ParseDecisionKind(const std::string &name);

struct Decision {
  std::string target_id;
  DecisionKind kind = DecisionKind::kNewCluster;
  std::string cluster_id;  // set for kAccept and kRepair
  int64_t reviewed_count = 0;

  bool operator==(const Decision &other) const = default;
};

// Answers "is this candidate coreferent with the target?" for one
// candidate at a time.
using CandidateJudge = std::function<bool(const RankedCandidate &)>;

// Offers candidates in rank order and stops at the first accept.
Decision Review(const Mention &target,
                const std::vector<RankedCandidate> &presented,
                const CandidateJudge &judge);

// Checks a decision against what was presented: accepts must name a
// presented cluster with reviewed_count equal to its rank; new clusters
// must have reviewed every presented candidate. Throws ValidationError.
void ValidateDecision(const Decision &decision,
                      const std::vector<RankedCandidate> &presented);

struct LogEntry {
  Decision decision;
  std::string topic_id;
  std::vector<std::string> presented;  // cluster ids in rank order
  int64_t timestamp_ms = 0;

  bool operator==(const LogEntry &other) const = default;
};

nlohmann::json LogEntryToJson(const LogEntry &entry);
LogEntry LogEntryFromJson(const nlohmann::json &j, size_t line = 0);

// Append-only record of decisions; replaying it rebuilds every store.
class DecisionLog {
 public:
  void Append(LogEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<LogEntry> &entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  void Write(std::ostream &out) const;
  static DecisionLog Read(std::istream &in);

 private:
  std::vector<LogEntry> entries_;
};

// Applies the decision to the store and, when `log` is given, records it
// with the presented list. Returns the cluster id now holding the target.
std::string ApplyDecision(ClusterStore &store, const Mention &target,
                          const Decision &decision,
                          const std::vector<RankedCandidate> &presented = {},
                          DecisionLog *log = nullptr, int64_t timestamp_ms = 0);

// One store per topic.
using StoreSet = std::map<std::string, ClusterStore>;

ClusterStore &StoreFor(StoreSet &stores, const std::string &topic_id);

// Rebuilds stores from a log. Throws ValidationError on unknown mentions
// and StoreError on illegal mutations.
StoreSet ReplayDecisions(const std::vector<LogEntry> &entries,
                         const MentionIndex &mentions);

}  // namespace ecranno

#endif  // ECRANNO_WORKFLOW_H_
