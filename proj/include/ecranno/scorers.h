#ifndef ECRANNO_SCORERS_H_
#define ECRANNO_SCORERS_H_

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecranno/corpus.h"
#include "json.hpp"

namespace ecranno {

// Weight of the trigger similarity against the sentence similarity.
struct LambdaConfig {
  double lambda = 0.7;
};

void ValidateLambda(const LambdaConfig &cfg);

// Coreference score for a mention pair. Implementations are symmetric,
// deterministic for a fixed configuration and immutable after
// construction, so Score() may be called concurrently.
class PairwiseScorer {
 public:
  virtual ~PairwiseScorer() = default;
  virtual double Score(const Mention &target, const Mention &candidate) const = 0;
  virtual std::string name() const = 0;
};

// Set Jaccard over the distinct strings of each list. Both empty gives 1,
// exactly one empty gives 0.
double Jaccard(const std::vector<std::string> &a,
               const std::vector<std::string> &b);

// lambda * J(trigger lemmas) + (1 - lambda) * J(sentence lemmas).
double LemmaScore(const Mention &target, const Mention &candidate,
                  const LambdaConfig &cfg);

// lambda * trigger_score + (1 - lambda) * context_score. Throws
// std::invalid_argument on non-finite input.
double CombinedScore(double trigger_score, double context_score,
                     const LambdaConfig &cfg);

// "<trigger> [SEP] <sentence tokens>", the text handed to external
// sentence-embedding scorers.
std::string BuildBertSentence(const Mention &m);

// Externally computed pair scores keyed by unordered mention-id pair.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;

  // Reads CSV (`mention_id_a,mention_id_b,score`, header optional) or
  // JSONL (`{"a":..,"b":..,"score":..}`); the format is detected from the
  // first non-blank line. Throws ValidationError on parse errors, non-finite
  // scores and conflicting duplicates.
  static ScoreMatrix Load(std::istream &in);
  static ScoreMatrix LoadFile(const std::string &path);

  // Inserts a pair; re-inserting the same value is a no-op, a different
  // value throws ValidationError.
  void Set(std::string_view a, std::string_view b, double score);

  std::optional<double> Find(std::string_view a, std::string_view b) const;

  // Lookup with default fallback; throws ScoreLookupError on a miss.
  double Lookup(std::string_view a, std::string_view b) const;

  void set_default_score(std::optional<double> score);
  const std::optional<double> &default_score() const { return default_score_; }
  size_t size() const { return scores_.size(); }

 private:
  static std::string Key(std::string_view a, std::string_view b);

  std::unordered_map<std::string, double> scores_;
  std::optional<double> default_score_;
};

double MatrixScore(const ScoreMatrix &matrix, const Mention &a,
                   const Mention &b);

// Hash-derived value in [0, 1) from (seed, unordered id pair).
double RandomScore(uint64_t seed, const Mention &a, const Mention &b);

class LemmaScorer : public PairwiseScorer {
 public:
  explicit LemmaScorer(LambdaConfig cfg);
  double Score(const Mention &target, const Mention &candidate) const override;
  std::string name() const override { return "lemma"; }

 private:
  LambdaConfig cfg_;
};

class MatrixScorer : public PairwiseScorer {
 public:
  explicit MatrixScorer(std::shared_ptr<const ScoreMatrix> matrix);
  double Score(const Mention &target, const Mention &candidate) const override;
  std::string name() const override { return "matrix"; }

 private:
  std::shared_ptr<const ScoreMatrix> matrix_;
};

// Lambda-weighted blend of a trigger-level and a context-level matrix,
// e.g. token-embedding similarity of triggers and of combined sentences.
class CombinedScorer : public PairwiseScorer {
 public:
  CombinedScorer(std::shared_ptr<const ScoreMatrix> trigger,
                 std::shared_ptr<const ScoreMatrix> context, LambdaConfig cfg);
  double Score(const Mention &target, const Mention &candidate) const override;
  std::string name() const override { return "combined"; }

 private:
  std::shared_ptr<const ScoreMatrix> trigger_;
  std::shared_ptr<const ScoreMatrix> context_;
  LambdaConfig cfg_;
};

class RandomScorer : public PairwiseScorer {
 public:
  explicit RandomScorer(uint64_t seed) : seed_(seed) {}
  double Score(const Mention &target, const Mention &candidate) const override;
  std::string name() const override { return "random"; }

 private:
  uint64_t seed_;
};

// Dense cache of every within-topic pair score, one lower-triangular block
// per topic. Pairs that are not in the same cached topic fall through to
// the wrapped scorer, which must outlive the cache.
class ScoreCache : public PairwiseScorer {
 public:
  ScoreCache(const std::vector<Mention> &topic, const PairwiseScorer &scorer);
  ScoreCache(const TopicPartition &partition, const PairwiseScorer &scorer);
  double Score(const Mention &target, const Mention &candidate) const override;
  std::string name() const override { return base_.name(); }

 private:
  struct Slot {
    size_t block;
    size_t index;
  };

  void AddBlock(const std::vector<Mention> &topic);

  const PairwiseScorer &base_;
  std::unordered_map<std::string, Slot> slots_;
  std::vector<std::vector<double>> blocks_;
};

enum class ScorerKind { kLemma, kMatrix, kCombined, kRandom };

ScorerKind ParseScorerKind(const std::string &name);
std::string ScorerKindName(ScorerKind kind);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kLemma;
  double lambda = 0.7;
  // kMatrix: the score file. kCombined: the trigger-level score file.
  std::string matrix_path;
  // kCombined only: the context-level score file.
  std::string context_matrix_path;
  std::optional<double> default_score;
};

nlohmann::json ScorerConfigToJson(const ScorerConfig &cfg);
ScorerConfig ScorerConfigFromJson(const nlohmann::json &j);

// Builds scorers for runs. Score files are read once at construction.
// For the random scorer, the per-run seed is split into a scorer stream.
class ScorerFactory {
 public:
  explicit ScorerFactory(ScorerConfig cfg);
  ScorerFactory(ScorerConfig cfg, std::shared_ptr<const ScoreMatrix> matrix,
                std::shared_ptr<const ScoreMatrix> context_matrix = nullptr);

  std::unique_ptr<PairwiseScorer> Make(uint64_t run_seed) const;

  // Same scorer family and score files with a different lambda.
  ScorerFactory WithLambda(double lambda) const;

  // True when Make() ignores its seed.
  bool seed_independent() const { return cfg_.kind != ScorerKind::kRandom; }
  const ScorerConfig &config() const { return cfg_; }

 private:
  void Check() const;

  ScorerConfig cfg_;
  std::shared_ptr<const ScoreMatrix> matrix_;
  std::shared_ptr<const ScoreMatrix> context_matrix_;
};

}  // namespace ecranno

#endif  // ECRANNO_SCORERS_H_
