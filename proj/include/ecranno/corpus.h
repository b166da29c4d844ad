#ifndef ECRANNO_CORPUS_H_
#define ECRANNO_CORPUS_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace ecranno {

// One annotated event trigger with its sentence context.
struct Mention {
  std::string mention_id;
  std::string doc_id;
  std::string topic_id;
  std::string subtopic_id;
  int64_t sentence_id = 0;
  int64_t trigger_start = 0;
  std::string trigger_text;
  std::vector<std::string> trigger_lemmas;
  std::vector<std::string> sentence_tokens;
  std::vector<std::string> sentence_lemmas;
  std::optional<std::string> gold_cluster_id;

  // Fields not recognized by the engine, kept verbatim for round-trips.
  nlohmann::json extra = nlohmann::json::object();

  // Number of whitespace-separated tokens in trigger_text.
  size_t TriggerTokenCount() const;

  bool operator==(const Mention &other) const = default;
};

// Which field scopes candidate retrieval and pair counting.
enum class TopicKey { kTopic, kSubtopic };

const std::string &TopicOf(const Mention &m, TopicKey key);
TopicKey ParseTopicKey(const std::string &name);

struct ParseOptions {
  // Receives non-fatal diagnostics such as the trigger-lemma fallback.
  std::vector<std::string> *warnings = nullptr;
};

// Reads the JSONL mention format. Blank lines are skipped. Throws
// ValidationError carrying the 1-based line of the first bad record.
std::vector<Mention> ParseMentions(std::istream &in,
                                   const ParseOptions &options = {});
std::vector<Mention> LoadMentions(const std::string &path,
                                  const ParseOptions &options = {});

nlohmann::json MentionToJson(const Mention &m);
Mention MentionFromJson(const nlohmann::json &j, size_t line = 0,
                        std::vector<std::string> *warnings = nullptr);
void WriteMentions(const std::vector<Mention> &mentions, std::ostream &out);

// Mentions grouped by topic; each group is in traversal order
// (doc_id, sentence_id, trigger_start, mention_id).
using TopicPartition = std::map<std::string, std::vector<Mention>>;

bool TraversalLess(const Mention &a, const Mention &b);
TopicPartition PartitionByTopic(const std::vector<Mention> &mentions,
                                TopicKey key = TopicKey::kTopic);

struct CorpusStats {
  int64_t topics = 0;
  int64_t documents = 0;
  int64_t mentions = 0;
  int64_t clusters = 0;
  int64_t singletons = 0;
  int64_t pairs_within_topic = 0;
  int64_t positive_pairs = 0;

  bool operator==(const CorpusStats &other) const = default;
};

// Requires gold labels on every mention; a gold cluster may not span
// two topic partitions.
CorpusStats ComputeCorpusStats(const std::vector<Mention> &mentions,
                               TopicKey key = TopicKey::kTopic);
nlohmann::json StatsToJson(const CorpusStats &stats);

// Throws ValidationError naming the first mention without a gold label.
void RequireGoldLabels(const std::vector<Mention> &mentions);

}  // namespace ecranno

#endif  // ECRANNO_CORPUS_H_
