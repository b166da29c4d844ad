#include "ecranno/workflow.h"

#include <algorithm>
#include <cmath>

#include "ecranno/errors.h"
#include "ecranno/seeding.h"

namespace ecranno {

using nlohmann::json;

void ValidatePruneConfig(const PruneConfig &cfg) {
  if (!(cfg.k >= 1.0)) {
    throw ValidationError("k must be >= 1, got " + std::to_string(cfg.k));
  }
}

MentionIndex BuildMentionIndex(const std::vector<Mention> &mentions) {
  MentionIndex index;
  index.reserve(mentions.size());
  for (const Mention &m : mentions) index.emplace(m.mention_id, &m);
  return index;
}

std::vector<RankedCandidate> RankCandidates(const Mention &target,
                                            const std::vector<Cluster> &clusters,
                                            const MentionIndex &mentions,
                                            const PairwiseScorer &scorer) {
  std::vector<RankedCandidate> ranked;
  ranked.reserve(clusters.size());
  for (const Cluster &c : clusters) {
    double sum = 0.0;
    for (const std::string &id : c.mention_ids) {
      auto it = mentions.find(id);
      if (it == mentions.end()) {
        throw StoreError("cluster '" + c.cluster_id + "' holds unknown mention '" +
                         id + "'");
      }
      sum += scorer.Score(target, *it->second);
    }
    ranked.push_back({c.cluster_id,
                      sum / static_cast<double>(c.mention_ids.size()), 0,
                      c.created_seq});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedCandidate &a, const RankedCandidate &b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.created_seq != b.created_seq) return a.created_seq < b.created_seq;
              return a.cluster_id < b.cluster_id;
            });
  for (size_t i = 0; i < ranked.size(); ++i) {
    ranked[i].rank = static_cast<int64_t>(i + 1);
  }
  return ranked;
}

size_t PresentedCount(size_t available, const PruneConfig &cfg,
                      uint64_t draw_index) {
  ValidatePruneConfig(cfg);
  if (cfg.k >= static_cast<double>(available)) return available;
  double whole = std::floor(cfg.k);
  double frac = cfg.k - whole;
  size_t count = static_cast<size_t>(whole);
  if (frac > 0.0) {
    uint64_t bits = Mix64(DeriveSeed(cfg.seed, kPruneStream) ^ Mix64(draw_index));
    if (UnitInterval(bits) < frac) ++count;
  }
  return std::min(count, available);
}

std::vector<RankedCandidate> PruneTopK(const std::vector<RankedCandidate> &ranked,
                                       const PruneConfig &cfg,
                                       uint64_t draw_index) {
  size_t n = PresentedCount(ranked.size(), cfg, draw_index);
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string DecisionKindName(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kAccept: return "accept";
    case DecisionKind::kNewCluster: return "new_cluster";
    case DecisionKind::kRepair: return "repair";
  }
  return "unknown";
}

DecisionKind ParseDecisionKind(const std::string &name) {
  if (name == "accept") return DecisionKind::kAccept;
  if (name == "new_cluster") return DecisionKind::kNewCluster;
  if (name == "repair") return DecisionKind::kRepair;
  throw ValidationError("unknown decision kind '" + name + "'");
}

Decision Review(const Mention &target,
                const std::vector<RankedCandidate> &presented,
                const CandidateJudge &judge) {
  Decision d;
  d.target_id = target.mention_id;
  for (const RankedCandidate &c : presented) {
    ++d.reviewed_count;
    if (judge(c)) {
      d.kind = DecisionKind::kAccept;
      d.cluster_id = c.cluster_id;
      return d;
    }
  }
  d.kind = DecisionKind::kNewCluster;
  return d;
}

void ValidateDecision(const Decision &decision,
                      const std::vector<RankedCandidate> &presented) {
  switch (decision.kind) {
    case DecisionKind::kAccept: {
      auto it = std::find_if(presented.begin(), presented.end(),
                             [&](const RankedCandidate &c) {
                               return c.cluster_id == decision.cluster_id;
                             });
      if (it == presented.end()) {
        throw ValidationError("cluster '" + decision.cluster_id +
                              "' was not presented for target '" +
                              decision.target_id + "'");
      }
      if (decision.reviewed_count != it->rank) {
        throw ValidationError(
            "reviewed_count " + std::to_string(decision.reviewed_count) +
            " does not match rank " + std::to_string(it->rank) +
            " of accepted cluster '" + decision.cluster_id + "'");
      }
      break;
    }
    case DecisionKind::kNewCluster:
      if (decision.reviewed_count != static_cast<int64_t>(presented.size())) {
        throw ValidationError(
            "new_cluster requires reviewed_count " +
            std::to_string(presented.size()) + ", got " +
            std::to_string(decision.reviewed_count));
      }
      break;
    case DecisionKind::kRepair:
      throw ValidationError("repair decisions are not accepted from reviewers");
  }
}

json LogEntryToJson(const LogEntry &e) {
  json j{{"target_id", e.decision.target_id},
         {"kind", DecisionKindName(e.decision.kind)},
         {"reviewed_count", e.decision.reviewed_count},
         {"topic_id", e.topic_id},
         {"presented", e.presented},
         {"timestamp_ms", e.timestamp_ms}};
  if (e.decision.kind != DecisionKind::kNewCluster) {
    j["cluster_id"] = e.decision.cluster_id;
  }
  return j;
}

LogEntry LogEntryFromJson(const json &j, size_t line) {
  try {
    LogEntry e;
    e.decision.target_id = j.at("target_id").get<std::string>();
    e.decision.kind = ParseDecisionKind(j.at("kind").get<std::string>());
    e.decision.reviewed_count = j.at("reviewed_count").get<int64_t>();
    if (e.decision.kind != DecisionKind::kNewCluster) {
      e.decision.cluster_id = j.at("cluster_id").get<std::string>();
    }
    e.topic_id = j.at("topic_id").get<std::string>();
    e.presented = j.at("presented").get<std::vector<std::string>>();
    e.timestamp_ms = j.value("timestamp_ms", int64_t{0});
    return e;
  } catch (const json::exception &ex) {
    throw ValidationError(std::string("bad decision log entry: ") + ex.what(), line);
  } catch (const ValidationError &ex) {
    throw ValidationError(ex.what(), line);
  }
}

void DecisionLog::Write(std::ostream &out) const {
  for (const LogEntry &e : entries_) out << LogEntryToJson(e).dump() << '\n';
}

DecisionLog DecisionLog::Read(std::istream &in) {
  DecisionLog log;
  std::string text;
  size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), line);
    }
    log.Append(LogEntryFromJson(j, line));
  }
  return log;
}

std::string ApplyDecision(ClusterStore &store, const Mention &target,
                          const Decision &decision,
                          const std::vector<RankedCandidate> &presented,
                          DecisionLog *log, int64_t timestamp_ms) {
  if (decision.target_id != target.mention_id) {
    throw ValidationError("decision for '" + decision.target_id +
                          "' applied to target '" + target.mention_id + "'");
  }
  std::string cluster_id;
  if (decision.kind == DecisionKind::kNewCluster) {
    cluster_id = store.CreateSingleton(target);
  } else {
    store.Merge(target, decision.cluster_id);
    cluster_id = decision.cluster_id;
  }
  if (log != nullptr) {
    LogEntry entry;
    entry.decision = decision;
    entry.topic_id = store.topic_id();
    entry.presented.reserve(presented.size());
    for (const RankedCandidate &c : presented) entry.presented.push_back(c.cluster_id);
    entry.timestamp_ms = timestamp_ms;
    log->Append(std::move(entry));
  }
  return cluster_id;
}

ClusterStore &StoreFor(StoreSet &stores, const std::string &topic_id) {
  auto it = stores.find(topic_id);
  if (it == stores.end()) it = stores.emplace(topic_id, ClusterStore(topic_id)).first;
  return it->second;
}

StoreSet ReplayDecisions(const std::vector<LogEntry> &entries,
                         const MentionIndex &mentions) {
  StoreSet stores;
  for (const LogEntry &e : entries) {
    auto it = mentions.find(e.decision.target_id);
    if (it == mentions.end()) {
      throw ValidationError("decision log names unknown mention '" +
                            e.decision.target_id + "'");
    }
    ApplyDecision(StoreFor(stores, e.topic_id), *it->second, e.decision);
  }
  return stores;
}

}  // namespace ecranno
