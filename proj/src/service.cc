#include "ecranno/service.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <regex>

#include "ecranno/errors.h"

namespace ecranno {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string TopicKeyName(TopicKey key) {
  return key == TopicKey::kSubtopic ? "subtopic" : "topic";
}

std::string AbsolutePath(const std::string &path) {
  if (path.empty()) return path;
  return fs::absolute(path).lexically_normal().string();
}

ApiResponse Error(int status, const std::string &message) {
  return {status, json{{"error", message}}};
}

bool ValidSessionId(const std::string &id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

}  // namespace

json SessionConfigToJson(const SessionConfig &cfg) {
  json j = ScorerConfigToJson(cfg.scorer);
  j["corpus_path"] = cfg.corpus_path;
  j["k"] = cfg.prune.k;
  j["seed"] = cfg.prune.seed;
  j["topic_key"] = TopicKeyName(cfg.topic_key);
  return j;
}

SessionConfig SessionConfigFromJson(const json &j) {
  SessionConfig cfg;
  cfg.scorer = ScorerConfigFromJson(j);
  cfg.corpus_path = j.at("corpus_path").get<std::string>();
  cfg.prune.k = j.at("k").get<double>();
  cfg.prune.seed = j.at("seed").get<uint64_t>();
  cfg.topic_key = ParseTopicKey(j.value("topic_key", std::string("topic")));
  return cfg;
}

json MentionView(const Mention &m) {
  return json{{"mention_id", m.mention_id},
              {"doc_id", m.doc_id},
              {"topic_id", m.topic_id},
              {"sentence_id", m.sentence_id},
              {"sentence_tokens", m.sentence_tokens},
              {"trigger_text", m.trigger_text},
              {"trigger_start", m.trigger_start},
              {"trigger_end",
               m.trigger_start + static_cast<int64_t>(m.TriggerTokenCount())}};
}

// Session

Session::Session(std::string id, SessionConfig cfg,
                 const std::vector<LogEntry> &log_entries)
    : id_(std::move(id)), cfg_(std::move(cfg)) {
  ValidatePruneConfig(cfg_.prune);
  corpus_ = LoadMentions(cfg_.corpus_path);
  partition_ = PartitionByTopic(corpus_, cfg_.topic_key);
  for (const auto &[topic, mentions] : partition_) {
    for (const Mention &m : mentions) traversal_.push_back(&m);
  }
  for (const Mention *m : traversal_) index_.emplace(m->mention_id, m);
  has_gold_ = std::all_of(corpus_.begin(), corpus_.end(),
                          [](const Mention &m) { return m.gold_cluster_id.has_value(); });
  factory_ = std::make_unique<ScorerFactory>(cfg_.scorer);
  scorer_ = factory_->Make(cfg_.prune.seed);
  Replay(log_entries);
}

const std::vector<RankedCandidate> &Session::presented() {
  if (exhausted()) throw OrderError("session '" + id_ + "' is exhausted");
  if (!pending_) {
    const Mention &target = current_target();
    ClusterStore &store = StoreFor(stores_, TopicOf(target, cfg_.topic_key));
    const std::vector<Cluster> &clusters = store.CandidatesFor(target, cfg_.topic_key);
    pending_ = PruneTopK(RankCandidates(target, clusters, index_, *scorer_),
                         cfg_.prune, cursor_);
  }
  return *pending_;
}

LogEntry Session::Preview(const Decision &decision, int64_t timestamp_ms) {
  if (exhausted()) throw OrderError("session '" + id_ + "' has no remaining targets");
  if (decision.target_id != current_target().mention_id) {
    throw OrderError("decision for '" + decision.target_id +
                     "' but the current target is '" +
                     current_target().mention_id + "'");
  }
  const std::vector<RankedCandidate> &shown = presented();
  ValidateDecision(decision, shown);
  LogEntry entry;
  entry.decision = decision;
  entry.topic_id = TopicOf(current_target(), cfg_.topic_key);
  for (const RankedCandidate &c : shown) entry.presented.push_back(c.cluster_id);
  entry.timestamp_ms = timestamp_ms;
  return entry;
}

LogEntry Session::Decide(const Decision &decision, int64_t timestamp_ms) {
  LogEntry entry = Preview(decision, timestamp_ms);
  Apply(decision, timestamp_ms);
  return entry;
}

void Session::Apply(const Decision &decision, int64_t timestamp_ms) {
  const Mention &target = current_target();
  ClusterStore &store = StoreFor(stores_, TopicOf(target, cfg_.topic_key));
  const std::vector<RankedCandidate> &shown = presented();

  TargetRecord record;
  record.target_id = target.mention_id;
  record.presented_count = static_cast<int64_t>(shown.size());
  record.comparisons = decision.reviewed_count;
  if (decision.kind == DecisionKind::kAccept) record.hit_rank = decision.reviewed_count;
  if (has_gold_) {
    for (const Cluster &c : store.clusters()) {
      for (const std::string &id : c.mention_ids) {
        if (index_.at(id)->gold_cluster_id == target.gold_cluster_id) {
          record.had_coreferent_in_store = true;
          break;
        }
      }
      if (record.had_coreferent_in_store) break;
    }
  }

  ApplyDecision(store, target, decision, shown, &log_, timestamp_ms);
  records_.push_back(std::move(record));
  pending_.reset();
  ++cursor_;
}

void Session::Replay(const std::vector<LogEntry> &entries) {
  for (size_t i = 0; i < entries.size(); ++i) {
    const LogEntry &e = entries[i];
    try {
      LogEntry expected = Preview(e.decision, e.timestamp_ms);
      if (expected.presented != e.presented || expected.topic_id != e.topic_id) {
        throw ValidationError("presented candidates differ from the log");
      }
    } catch (const std::exception &ex) {
      throw ValidationError("decision log of session '" + id_ +
                            "' diverges at entry " + std::to_string(i + 1) +
                            ": " + ex.what());
    }
    Apply(e.decision, e.timestamp_ms);
  }
}

// AnnotationService

AnnotationService::AnnotationService(std::string state_dir, SessionConfig defaults)
    : state_dir_(std::move(state_dir)), defaults_(std::move(defaults)) {
  defaults_.corpus_path = AbsolutePath(defaults_.corpus_path);
  defaults_.scorer.matrix_path = AbsolutePath(defaults_.scorer.matrix_path);
  defaults_.scorer.context_matrix_path =
      AbsolutePath(defaults_.scorer.context_matrix_path);
  fs::create_directories(state_dir_);
  Restore();
}

std::string AnnotationService::SessionDir(const std::string &session_id) const {
  return (fs::path(state_dir_) / session_id).string();
}

void AnnotationService::Restore() {
  std::vector<fs::path> dirs;
  for (const auto &entry : fs::directory_iterator(state_dir_)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path &dir : dirs) {
    const std::string id = dir.filename().string();
    if (!ValidSessionId(id) || !fs::exists(dir / "manifest.json")) continue;
    if (id.size() > 1 && id[0] == 's' &&
        std::all_of(id.begin() + 1, id.end(), ::isdigit)) {
      next_id_ = std::max<uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
    }
    try {
      std::ifstream manifest_in(dir / "manifest.json");
      json manifest = json::parse(manifest_in);
      SessionConfig cfg = SessionConfigFromJson(manifest.at("config"));
      DecisionLog log;
      const fs::path log_path = dir / "decisions.jsonl";
      if (fs::exists(log_path)) {
        std::string text;
        {
          std::ifstream log_in(log_path, std::ios::binary);
          text.assign(std::istreambuf_iterator<char>(log_in), {});
        }
        // A crash during an append leaves a final line without its newline;
        // that decision was never applied, so drop it.
        if (!text.empty() && text.back() != '\n') {
          size_t keep = text.rfind('\n');
          keep = keep == std::string::npos ? 0 : keep + 1;
          restore_warnings_.push_back("session '" + id +
                                      "': dropped a truncated final decision");
          text.resize(keep);
          std::ofstream rewrite(log_path, std::ios::binary | std::ios::trunc);
          rewrite << text;
        }
        std::istringstream log_in(text);
        log = DecisionLog::Read(log_in);
      }
      sessions_[id] = std::make_shared<Session>(id, std::move(cfg), log.entries());
    } catch (const std::exception &e) {
      restore_warnings_.push_back("session '" + id + "' not restored: " + e.what());
    }
  }
}

std::shared_ptr<Session> AnnotationService::Find(const std::string &session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse AnnotationService::CreateSession(const json &body) {
  if (!body.is_object()) return Error(422, "request body must be a JSON object");

  SessionConfig cfg = defaults_;
  std::optional<json> inline_corpus;
  try {
    if (body.contains("corpus_path")) {
      cfg.corpus_path = AbsolutePath(body.at("corpus_path").get<std::string>());
    }
    if (body.contains("corpus")) {
      if (!body.at("corpus").is_array()) {
        return Error(422, "'corpus' must be an array of mention objects");
      }
      inline_corpus = body.at("corpus");
    }
    if (body.contains("scorer")) {
      cfg.scorer.kind = ParseScorerKind(body.at("scorer").get<std::string>());
    }
    if (body.contains("lambda")) cfg.scorer.lambda = body.at("lambda").get<double>();
    if (body.contains("matrix")) {
      cfg.scorer.matrix_path = AbsolutePath(body.at("matrix").get<std::string>());
    }
    if (body.contains("context_matrix")) {
      cfg.scorer.context_matrix_path =
          AbsolutePath(body.at("context_matrix").get<std::string>());
    }
    if (body.contains("default_score")) {
      cfg.scorer.default_score = body.at("default_score").get<double>();
    }
    if (body.contains("k")) cfg.prune.k = body.at("k").get<double>();
    if (body.contains("seed")) cfg.prune.seed = body.at("seed").get<uint64_t>();
    if (body.contains("topic_key")) {
      cfg.topic_key = ParseTopicKey(body.at("topic_key").get<std::string>());
    }
    ValidatePruneConfig(cfg.prune);
    ValidateLambda({cfg.scorer.lambda});
  } catch (const json::exception &e) {
    return Error(422, std::string("invalid session body: ") + e.what());
  } catch (const ValidationError &e) {
    return Error(422, e.what());
  }
  if (!inline_corpus && cfg.corpus_path.empty()) {
    return Error(422, "no corpus given (corpus_path or corpus)");
  }

  std::string id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    do {
      id = "s" + std::to_string(next_id_++);
    } while (fs::exists(SessionDir(id)));
  }
  const fs::path dir = SessionDir(id);
  fs::create_directories(dir);

  std::shared_ptr<Session> session;
  try {
    if (inline_corpus) {
      std::vector<Mention> mentions;
      size_t line = 0;
      for (const json &m : *inline_corpus) mentions.push_back(MentionFromJson(m, ++line));
      std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
      WriteMentions(mentions, out);
      cfg.corpus_path = AbsolutePath((dir / "corpus.jsonl").string());
    }
    session = std::make_shared<Session>(id, cfg);
    std::ofstream manifest(dir / "manifest.json", std::ios::binary);
    manifest << json{{"session_id", id}, {"config", SessionConfigToJson(cfg)}}.dump(2)
             << '\n';
    if (!manifest) throw std::runtime_error("cannot write session manifest");
  } catch (const std::exception &e) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    return Error(422, e.what());
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    sessions_[id] = session;
  }
  return {200, json{{"session_id", id}, {"total", session->total()}}};
}

ApiResponse AnnotationService::ListSessions() const {
  std::lock_guard<std::mutex> lock(mu_);
  json ids = json::array();
  for (const auto &[id, session] : sessions_) ids.push_back(id);
  return {200, json{{"sessions", std::move(ids)}}};
}

ApiResponse AnnotationService::Next(const std::string &session_id) {
  auto session = Find(session_id);
  if (!session) return Error(404, "unknown session '" + session_id + "'");
  std::lock_guard<std::mutex> lock(session->mutex());
  if (session->exhausted()) return {204, nullptr};

  const std::vector<RankedCandidate> &presented = session->presented();
  const Mention &target = session->current_target();
  const ClusterStore &store =
      session->stores().at(TopicOf(target, session->config().topic_key));

  json candidates = json::array();
  for (const RankedCandidate &c : presented) {
    json mentions = json::array();
    for (const std::string &id : store.Find(c.cluster_id)->mention_ids) {
      mentions.push_back(MentionView(*session->mentions().at(id)));
    }
    candidates.push_back({{"cluster_id", c.cluster_id},
                          {"score", c.score},
                          {"rank", c.rank},
                          {"mentions", std::move(mentions)}});
  }
  json progress{{"done", session->cursor()},
                {"total", session->total()},
                {"comparisons_so_far", Comparisons(session->records())}};
  return {200, json{{"target", MentionView(target)},
                    {"candidates", std::move(candidates)},
                    {"progress", std::move(progress)}}};
}

ApiResponse AnnotationService::SubmitDecision(const std::string &session_id,
                                              const json &body) {
  auto session = Find(session_id);
  if (!session) return Error(404, "unknown session '" + session_id + "'");

  Decision decision;
  try {
    if (!body.is_object()) return Error(422, "request body must be a JSON object");
    decision.target_id = body.at("target_id").get<std::string>();
    std::string kind = body.at("kind").get<std::string>();
    if (kind != "accept" && kind != "new_cluster") {
      return Error(422, "kind must be accept or new_cluster");
    }
    decision.kind = ParseDecisionKind(kind);
    if (decision.kind == DecisionKind::kAccept) {
      decision.cluster_id = body.at("cluster_id").get<std::string>();
    }
    decision.reviewed_count = body.at("reviewed_count").get<int64_t>();
  } catch (const json::exception &e) {
    return Error(422, std::string("invalid decision body: ") + e.what());
  }

  std::lock_guard<std::mutex> lock(session->mutex());
  LogEntry entry;
  try {
    entry = session->Preview(decision, NowMs());
  } catch (const OrderError &e) {
    return Error(409, e.what());
  } catch (const ValidationError &e) {
    return Error(422, e.what());
  }

  {
    std::ofstream out(fs::path(SessionDir(session_id)) / "decisions.jsonl",
                      std::ios::app | std::ios::binary);
    out << LogEntryToJson(entry).dump() << '\n';
    out.flush();
    if (!out) return Error(500, "cannot persist decision");
  }
  session->Decide(decision, entry.timestamp_ms);

  const ClusterStore &store = session->stores().at(entry.topic_id);
  return {200, json{{"target_id", decision.target_id},
                    {"cluster_id", store.ClusterOf(decision.target_id)},
                    {"progress",
                     {{"done", session->cursor()},
                      {"total", session->total()},
                      {"comparisons_so_far", Comparisons(session->records())}}}}};
}

ApiResponse AnnotationService::Export(const std::string &session_id) {
  auto session = Find(session_id);
  if (!session) return Error(404, "unknown session '" + session_id + "'");
  std::lock_guard<std::mutex> lock(session->mutex());
  json topics = json::array();
  for (const auto &[topic, store] : session->stores()) topics.push_back(store.ToJson());
  return {200, json{{"session_id", session_id}, {"topics", std::move(topics)}}};
}

ApiResponse AnnotationService::Metrics(const std::string &session_id) {
  auto session = Find(session_id);
  if (!session) return Error(404, "unknown session '" + session_id + "'");
  std::lock_guard<std::mutex> lock(session->mutex());
  json records = json::array();
  for (const TargetRecord &r : session->records()) records.push_back(RecordToJson(r));
  return {200,
          json{{"comparisons", Comparisons(session->records())},
               {"done", session->cursor()},
               {"total", session->total()},
               {"recall", session->has_gold() ? json(Recall(session->records()))
                                              : json(nullptr)},
               {"records", std::move(records)}}};
}

}  // namespace ecranno
