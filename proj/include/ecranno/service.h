#ifndef ECRANNO_SERVICE_H_
#define ECRANNO_SERVICE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecranno/corpus.h"
#include "ecranno/metrics.h"
#include "ecranno/scorers.h"
#include "ecranno/workflow.h"
#include "json.hpp"

namespace ecranno {

struct SessionConfig {
  std::string corpus_path;
  ScorerConfig scorer;
  PruneConfig prune;
  TopicKey topic_key = TopicKey::kTopic;
};

nlohmann::json SessionConfigToJson(const SessionConfig &cfg);
SessionConfig SessionConfigFromJson(const nlohmann::json &j);

// A decision that does not address the session's current target.
class OrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;  // null for bodiless responses (204)
};

// One live annotation session. Its state is the manifest plus the decision
// log; everything else is rebuilt by replaying the log through the same
// rank/prune pipeline.
class Session {
 public:
  // Loads the corpus and scorer; replays `log_entries` if given.
  Session(std::string id, SessionConfig cfg,
          const std::vector<LogEntry> &log_entries = {});

  const std::string &id() const { return id_; }
  const SessionConfig &config() const { return cfg_; }
  size_t cursor() const { return cursor_; }
  size_t total() const { return traversal_.size(); }
  bool exhausted() const { return cursor_ >= traversal_.size(); }

  const Mention &current_target() const { return *traversal_[cursor_]; }
  // Pruned ranked candidates for the current target.
  const std::vector<RankedCandidate> &presented();

  // Checks a reviewer decision for the current target and returns the log
  // entry it would produce. Throws OrderError for a stale or out-of-order
  // target, ValidationError for a decision inconsistent with what was
  // presented.
  LogEntry Preview(const Decision &decision, int64_t timestamp_ms);

  // Preview() followed by applying the decision.
  LogEntry Decide(const Decision &decision, int64_t timestamp_ms);

  std::mutex &mutex() { return mu_; }

  const StoreSet &stores() const { return stores_; }
  const std::vector<TargetRecord> &records() const { return records_; }
  const std::vector<LogEntry> &log() const { return log_.entries(); }
  const MentionIndex &mentions() const { return index_; }
  bool has_gold() const { return has_gold_; }

 private:
  void Apply(const Decision &decision, int64_t timestamp_ms);
  void Replay(const std::vector<LogEntry> &entries);

  std::string id_;
  SessionConfig cfg_;
  std::vector<Mention> corpus_;
  TopicPartition partition_;
  std::vector<const Mention *> traversal_;
  MentionIndex index_;
  std::unique_ptr<ScorerFactory> factory_;
  std::unique_ptr<PairwiseScorer> scorer_;
  bool has_gold_ = false;

  size_t cursor_ = 0;
  std::optional<std::vector<RankedCandidate>> pending_;
  StoreSet stores_;
  DecisionLog log_;
  std::vector<TargetRecord> records_;
  std::mutex mu_;
};


// Transport-independent implementation of the annotation HTTP API. Session
// state lives under `state_dir/{session_id}/` as manifest.json and
// decisions.jsonl; sessions found there are restored on construction.
class AnnotationService {
 public:
  AnnotationService(std::string state_dir, SessionConfig defaults);

  ApiResponse CreateSession(const nlohmann::json &body);
  ApiResponse ListSessions() const;
  ApiResponse Next(const std::string &session_id);
  ApiResponse SubmitDecision(const std::string &session_id,
                             const nlohmann::json &body);
  ApiResponse Export(const std::string &session_id);
  ApiResponse Metrics(const std::string &session_id);

  // Warnings raised while restoring sessions at startup.
  const std::vector<std::string> &restore_warnings() const {
    return restore_warnings_;
  }

 private:
  std::shared_ptr<Session> Find(const std::string &session_id) const;
  std::string SessionDir(const std::string &session_id) const;
  void Restore();

  std::string state_dir_;
  SessionConfig defaults_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_id_ = 1;
  std::vector<std::string> restore_warnings_;
};

// JSON view of a mention for reviewers: sentence, trigger span, ids. Gold
// labels are never shown.
nlohmann::json MentionView(const Mention &m);

}  // namespace ecranno

#endif  // ECRANNO_SERVICE_H_
