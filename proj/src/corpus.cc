#include "ecranno/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "ecranno/errors.h"

namespace ecranno {

namespace {

using nlohmann::json;

const char *const kKnownFields[] = {
    "mention_id",     "doc_id",         "topic_id",
    "subtopic_id",    "sentence_id",    "trigger_start",
    "trigger_text",   "trigger_lemmas", "sentence_tokens",
    "sentence_lemmas", "gold_cluster_id",
};

bool IsKnownField(const std::string &name) {
  for (const char *f : kKnownFields) {
    if (name == f) return true;
  }
  return false;
}

std::vector<std::string> SplitWhitespace(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::string AsciiLower(std::string s) {
  for (char &c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

const json &Require(const json &j, const char *field, size_t line) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) {
    throw ValidationError(std::string("missing required field '") + field + "'",
                          line);
  }
  return *it;
}

std::string GetString(const json &j, const char *field, size_t line) {
  const json &v = Require(j, field, line);
  if (!v.is_string()) {
    throw ValidationError(std::string("field '") + field + "' must be a string",
                          line);
  }
  return v.get<std::string>();
}

int64_t GetNonNegative(const json &j, const char *field, size_t line) {
  const json &v = Require(j, field, line);
  if (!v.is_number_integer()) {
    throw ValidationError(
        std::string("field '") + field + "' must be an integer", line);
  }
  int64_t value = v.get<int64_t>();
  if (value < 0) {
    throw ValidationError(std::string("field '") + field + "' must be >= 0",
                          line);
  }
  return value;
}

std::vector<std::string> GetStringList(const json &v, const char *field,
                                       size_t line) {
  if (!v.is_array()) {
    throw ValidationError(
        std::string("field '") + field + "' must be a list of strings", line);
  }
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const json &e : v) {
    if (!e.is_string()) {
      throw ValidationError(
          std::string("field '") + field + "' must be a list of strings", line);
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

size_t Mention::TriggerTokenCount() const {
  return SplitWhitespace(trigger_text).size();
}

const std::string &TopicOf(const Mention &m, TopicKey key) {
  return key == TopicKey::kSubtopic ? m.subtopic_id : m.topic_id;
}

TopicKey ParseTopicKey(const std::string &name) {
  if (name == "topic" || name == "topic_id") return TopicKey::kTopic;
  if (name == "subtopic" || name == "subtopic_id") return TopicKey::kSubtopic;
  throw ValidationError("unknown topic key '" + name +
                        "' (expected topic or subtopic)");
}

Mention MentionFromJson(const json &j, size_t line,
                        std::vector<std::string> *warnings) {
  if (!j.is_object()) throw ValidationError("expected a JSON object", line);

  Mention m;
  m.mention_id = GetString(j, "mention_id", line);
  if (m.mention_id.empty()) {
    throw ValidationError("field 'mention_id' must be non-empty", line);
  }
  m.doc_id = GetString(j, "doc_id", line);
  m.topic_id = GetString(j, "topic_id", line);
  if (j.contains("subtopic_id") && !j["subtopic_id"].is_null()) {
    m.subtopic_id = GetString(j, "subtopic_id", line);
  } else {
    m.subtopic_id = m.topic_id;
  }
  m.sentence_id = GetNonNegative(j, "sentence_id", line);
  m.trigger_start = GetNonNegative(j, "trigger_start", line);
  m.trigger_text = GetString(j, "trigger_text", line);
  if (SplitWhitespace(m.trigger_text).empty()) {
    throw ValidationError("field 'trigger_text' must be non-empty", line);
  }

  m.sentence_tokens =
      GetStringList(Require(j, "sentence_tokens", line), "sentence_tokens", line);
  m.sentence_lemmas =
      GetStringList(Require(j, "sentence_lemmas", line), "sentence_lemmas", line);
  if (m.sentence_tokens.empty()) {
    throw ValidationError("field 'sentence_tokens' must be non-empty", line);
  }
  if (m.sentence_lemmas.size() != m.sentence_tokens.size()) {
    throw ValidationError(
        "field 'sentence_lemmas' has length " +
            std::to_string(m.sentence_lemmas.size()) +
            " but 'sentence_tokens' has length " +
            std::to_string(m.sentence_tokens.size()),
        line);
  }

  if (j.contains("trigger_lemmas") && !j["trigger_lemmas"].is_null()) {
    m.trigger_lemmas =
        GetStringList(j["trigger_lemmas"], "trigger_lemmas", line);
    if (m.trigger_lemmas.empty()) {
      throw ValidationError("field 'trigger_lemmas' must be non-empty", line);
    }
  } else {
    for (const std::string &t : SplitWhitespace(m.trigger_text)) {
      m.trigger_lemmas.push_back(AsciiLower(t));
    }
    if (warnings != nullptr) {
      warnings->push_back(
          (line ? "line " + std::to_string(line) + ": " : std::string()) +
          "mention '" + m.mention_id +
          "' has no trigger_lemmas; using lowercased trigger tokens");
    }
  }

  size_t span = m.TriggerTokenCount();
  if (static_cast<size_t>(m.trigger_start) + span > m.sentence_tokens.size()) {
    throw ValidationError(
        "trigger span [" + std::to_string(m.trigger_start) + ", " +
            std::to_string(m.trigger_start + static_cast<int64_t>(span)) +
            ") exceeds sentence length " +
            std::to_string(m.sentence_tokens.size()),
        line);
  }

  if (j.contains("gold_cluster_id") && !j["gold_cluster_id"].is_null()) {
    m.gold_cluster_id = GetString(j, "gold_cluster_id", line);
  }

  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!IsKnownField(it.key())) m.extra[it.key()] = it.value();
  }
  return m;
}

json MentionToJson(const Mention &m) {
  json j = m.extra.is_object() ? m.extra : json::object();
  j["mention_id"] = m.mention_id;
  j["doc_id"] = m.doc_id;
  j["topic_id"] = m.topic_id;
  j["subtopic_id"] = m.subtopic_id;
  j["sentence_id"] = m.sentence_id;
  j["trigger_start"] = m.trigger_start;
  j["trigger_text"] = m.trigger_text;
  j["trigger_lemmas"] = m.trigger_lemmas;
  j["sentence_tokens"] = m.sentence_tokens;
  j["sentence_lemmas"] = m.sentence_lemmas;
  if (m.gold_cluster_id) j["gold_cluster_id"] = *m.gold_cluster_id;
  return j;
}

std::vector<Mention> ParseMentions(std::istream &in,
                                   const ParseOptions &options) {
  std::vector<Mention> mentions;
  std::unordered_map<std::string, size_t> first_line;
  std::string text;
  size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), line);
    }
    Mention m = MentionFromJson(j, line, options.warnings);
    auto [it, inserted] = first_line.emplace(m.mention_id, line);
    if (!inserted) {
      throw ValidationError("duplicate mention_id '" + m.mention_id +
                                "' (first seen on line " +
                                std::to_string(it->second) + ")",
                            line);
    }
    mentions.push_back(std::move(m));
  }
  return mentions;
}

std::vector<Mention> LoadMentions(const std::string &path,
                                  const ParseOptions &options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path + "'");
  return ParseMentions(in, options);
}

void WriteMentions(const std::vector<Mention> &mentions, std::ostream &out) {
  for (const Mention &m : mentions) out << MentionToJson(m).dump() << '\n';
}

bool TraversalLess(const Mention &a, const Mention &b) {
  return std::tie(a.doc_id, a.sentence_id, a.trigger_start, a.mention_id) <
         std::tie(b.doc_id, b.sentence_id, b.trigger_start, b.mention_id);
}

TopicPartition PartitionByTopic(const std::vector<Mention> &mentions,
                                TopicKey key) {
  TopicPartition partition;
  for (const Mention &m : mentions) partition[TopicOf(m, key)].push_back(m);
  for (auto &[topic, list] : partition) {
    std::sort(list.begin(), list.end(), TraversalLess);
  }
  return partition;
}

void RequireGoldLabels(const std::vector<Mention> &mentions) {
  for (const Mention &m : mentions) {
    if (!m.gold_cluster_id) {
      throw ValidationError("mention '" + m.mention_id +
                            "' has no gold_cluster_id");
    }
  }
}

CorpusStats ComputeCorpusStats(const std::vector<Mention> &mentions,
                               TopicKey key) {
  RequireGoldLabels(mentions);

  std::map<std::string, int64_t> topic_sizes;
  std::set<std::string> docs;
  std::map<std::string, int64_t> cluster_sizes;
  std::unordered_map<std::string, std::string> cluster_topic;
  for (const Mention &m : mentions) {
    const std::string &topic = TopicOf(m, key);
    ++topic_sizes[topic];
    docs.insert(m.doc_id);
    ++cluster_sizes[*m.gold_cluster_id];
    auto [it, inserted] = cluster_topic.emplace(*m.gold_cluster_id, topic);
    if (!inserted && it->second != topic) {
      throw ValidationError("gold cluster '" + *m.gold_cluster_id +
                            "' spans topics '" + it->second + "' and '" +
                            topic + "'");
    }
  }

  CorpusStats stats;
  stats.topics = static_cast<int64_t>(topic_sizes.size());
  stats.documents = static_cast<int64_t>(docs.size());
  stats.mentions = static_cast<int64_t>(mentions.size());
  stats.clusters = static_cast<int64_t>(cluster_sizes.size());
  for (const auto &[topic, n] : topic_sizes) {
    stats.pairs_within_topic += n * (n - 1) / 2;
  }
  for (const auto &[cluster, n] : cluster_sizes) {
    if (n == 1) ++stats.singletons;
    stats.positive_pairs += n * (n - 1) / 2;
  }
  return stats;
}

json StatsToJson(const CorpusStats &s) {
  return json{{"topics", s.topics},
              {"documents", s.documents},
              {"mentions", s.mentions},
              {"clusters", s.clusters},
              {"singletons", s.singletons},
              {"pairs_within_topic", s.pairs_within_topic},
              {"positive_pairs", s.positive_pairs}};
}

}  // namespace ecranno
