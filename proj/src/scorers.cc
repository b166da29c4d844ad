#include "ecranno/scorers.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ecranno/errors.h"
#include "ecranno/seeding.h"

namespace ecranno {

namespace {

using nlohmann::json;

std::vector<std::string> SortedUnique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string_view Trim(std::string_view s) {
  size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double ParseScore(std::string_view text, size_t line) {
  text = Trim(text);
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("invalid score '" + std::string(text) + "'", line);
  }
  if (!std::isfinite(value)) {
    throw ValidationError("score must be finite", line);
  }
  return value;
}

}  // namespace

void ValidateLambda(const LambdaConfig &cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
    throw ValidationError("lambda must lie in [0, 1], got " +
                          std::to_string(cfg.lambda));
  }
}

double Jaccard(const std::vector<std::string> &a,
               const std::vector<std::string> &b) {
  std::vector<std::string> sa = SortedUnique(a);
  std::vector<std::string> sb = SortedUnique(b);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;

  size_t common = 0;
  auto ia = sa.begin();
  auto ib = sb.begin();
  while (ia != sa.end() && ib != sb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  size_t total = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(total);
}

double LemmaScore(const Mention &target, const Mention &candidate,
                  const LambdaConfig &cfg) {
  return CombinedScore(Jaccard(target.trigger_lemmas, candidate.trigger_lemmas),
                       Jaccard(target.sentence_lemmas, candidate.sentence_lemmas),
                       cfg);
}

double CombinedScore(double trigger_score, double context_score,
                     const LambdaConfig &cfg) {
  if (!std::isfinite(trigger_score) || !std::isfinite(context_score)) {
    throw std::invalid_argument("combined score inputs must be finite");
  }
  return cfg.lambda * trigger_score + (1.0 - cfg.lambda) * context_score;
}

std::string BuildBertSentence(const Mention &m) {
  std::string out = m.trigger_text;
  out += " [SEP]";
  for (const std::string &token : m.sentence_tokens) {
    out += ' ';
    out += token;
  }
  return out;
}

// ScoreMatrix

std::string ScoreMatrix::Key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  std::string key;
  key.reserve(a.size() + b.size() + 1);
  key.append(a);
  key.push_back('\x1f');
  key.append(b);
  return key;
}

void ScoreMatrix::Set(std::string_view a, std::string_view b, double score) {
  if (!std::isfinite(score)) {
    throw ValidationError("score for pair (" + std::string(a) + ", " +
                          std::string(b) + ") must be finite");
  }
  auto [it, inserted] = scores_.emplace(Key(a, b), score);
  if (!inserted && it->second != score) {
    throw ValidationError("conflicting scores for pair (" + std::string(a) +
                          ", " + std::string(b) + ")");
  }
}

std::optional<double> ScoreMatrix::Find(std::string_view a,
                                        std::string_view b) const {
  auto it = scores_.find(Key(a, b));
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

double ScoreMatrix::Lookup(std::string_view a, std::string_view b) const {
  if (auto s = Find(a, b)) return *s;
  if (default_score_) return *default_score_;
  throw ScoreLookupError("no score for pair (" + std::string(a) + ", " +
                         std::string(b) + ") and no default score");
}

void ScoreMatrix::set_default_score(std::optional<double> score) {
  if (score && !std::isfinite(*score)) {
    throw ValidationError("default score must be finite");
  }
  default_score_ = score;
}

ScoreMatrix ScoreMatrix::Load(std::istream &in) {
  ScoreMatrix matrix;
  std::string text;
  size_t line = 0;
  enum class Format { kUnknown, kCsv, kJsonl } format = Format::kUnknown;
  while (std::getline(in, text)) {
    ++line;
    std::string_view row = Trim(text);
    if (row.empty()) continue;

    if (format == Format::kUnknown) {
      format = row.front() == '{' ? Format::kJsonl : Format::kCsv;
      if (format == Format::kCsv && row == "mention_id_a,mention_id_b,score") {
        continue;
      }
    }

    try {
      if (format == Format::kJsonl) {
        json j;
        try {
          j = json::parse(row);
        } catch (const json::parse_error &e) {
          throw ValidationError(std::string("malformed JSON: ") + e.what(), line);
        }
        if (!j.is_object() || !j.contains("a") || !j.contains("b") ||
            !j.contains("score") || !j["a"].is_string() ||
            !j["b"].is_string() || !j["score"].is_number()) {
          throw ValidationError(
              "expected {\"a\": string, \"b\": string, \"score\": number}", line);
        }
        double score = j["score"].get<double>();
        if (!std::isfinite(score)) throw ValidationError("score must be finite", line);
        matrix.Set(j["a"].get<std::string>(), j["b"].get<std::string>(), score);
      } else {
        size_t c1 = row.find(',');
        size_t c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
        if (c2 == std::string_view::npos ||
            row.find(',', c2 + 1) != std::string_view::npos) {
          throw ValidationError("expected 3 comma-separated fields", line);
        }
        std::string_view a = Trim(row.substr(0, c1));
        std::string_view b = Trim(row.substr(c1 + 1, c2 - c1 - 1));
        if (a.empty() || b.empty()) throw ValidationError("empty mention id", line);
        matrix.Set(a, b, ParseScore(row.substr(c2 + 1), line));
      }
    } catch (const ValidationError &e) {
      if (e.line() != 0) throw;
      throw ValidationError(e.what(), line);
    }
  }
  return matrix;
}

ScoreMatrix ScoreMatrix::LoadFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file '" + path + "'");
  return Load(in);
}

double MatrixScore(const ScoreMatrix &matrix, const Mention &a,
                   const Mention &b) {
  return matrix.Lookup(a.mention_id, b.mention_id);
}

double RandomScore(uint64_t seed, const Mention &a, const Mention &b) {
  const std::string *lo = &a.mention_id;
  const std::string *hi = &b.mention_id;
  if (*hi < *lo) std::swap(lo, hi);
  uint64_t h = HashString(*lo);
  h = Mix64(h ^ Mix64(HashString(*hi) + 0x632be59bd9b4e019ULL));
  return UnitInterval(Mix64(h ^ seed));
}

// Scorer implementations

LemmaScorer::LemmaScorer(LambdaConfig cfg) : cfg_(cfg) { ValidateLambda(cfg_); }

double LemmaScorer::Score(const Mention &target,
                          const Mention &candidate) const {
  return LemmaScore(target, candidate, cfg_);
}

MatrixScorer::MatrixScorer(std::shared_ptr<const ScoreMatrix> matrix)
    : matrix_(std::move(matrix)) {
  if (!matrix_) throw std::invalid_argument("matrix scorer needs a score matrix");
}

double MatrixScorer::Score(const Mention &target,
                           const Mention &candidate) const {
  return MatrixScore(*matrix_, target, candidate);
}

CombinedScorer::CombinedScorer(std::shared_ptr<const ScoreMatrix> trigger,
                               std::shared_ptr<const ScoreMatrix> context,
                               LambdaConfig cfg)
    : trigger_(std::move(trigger)), context_(std::move(context)), cfg_(cfg) {
  if (!trigger_ || !context_) {
    throw std::invalid_argument(
        "combined scorer needs trigger and context score matrices");
  }
  ValidateLambda(cfg_);
}

double CombinedScorer::Score(const Mention &target,
                             const Mention &candidate) const {
  return CombinedScore(MatrixScore(*trigger_, target, candidate),
                       MatrixScore(*context_, target, candidate), cfg_);
}

double RandomScorer::Score(const Mention &target,
                           const Mention &candidate) const {
  return RandomScore(seed_, target, candidate);
}

// ScoreCache

ScoreCache::ScoreCache(const std::vector<Mention> &topic,
                       const PairwiseScorer &scorer)
    : base_(scorer) {
  AddBlock(topic);
}

ScoreCache::ScoreCache(const TopicPartition &partition,
                       const PairwiseScorer &scorer)
    : base_(scorer) {
  for (const auto &[topic, mentions] : partition) AddBlock(mentions);
}

void ScoreCache::AddBlock(const std::vector<Mention> &topic) {
  const size_t block = blocks_.size();
  const size_t n = topic.size();
  for (size_t i = 0; i < n; ++i) slots_.emplace(topic[i].mention_id, Slot{block, i});
  std::vector<double> scores(n * (n + 1) / 2);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      scores[i * (i + 1) / 2 + j] = base_.Score(topic[i], topic[j]);
    }
  }
  blocks_.push_back(std::move(scores));
}

double ScoreCache::Score(const Mention &target, const Mention &candidate) const {
  auto a = slots_.find(target.mention_id);
  auto b = slots_.find(candidate.mention_id);
  if (a == slots_.end() || b == slots_.end() ||
      a->second.block != b->second.block) {
    return base_.Score(target, candidate);
  }
  size_t hi = std::max(a->second.index, b->second.index);
  size_t lo = std::min(a->second.index, b->second.index);
  return blocks_[a->second.block][hi * (hi + 1) / 2 + lo];
}

// Configuration

ScorerKind ParseScorerKind(const std::string &name) {
  if (name == "lemma") return ScorerKind::kLemma;
  if (name == "matrix") return ScorerKind::kMatrix;
  if (name == "combined") return ScorerKind::kCombined;
  if (name == "random") return ScorerKind::kRandom;
  throw ValidationError("unknown scorer '" + name +
                        "' (expected lemma, matrix, combined or random)");
}

std::string ScorerKindName(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kLemma: return "lemma";
    case ScorerKind::kMatrix: return "matrix";
    case ScorerKind::kCombined: return "combined";
    case ScorerKind::kRandom: return "random";
  }
  return "unknown";
}

json ScorerConfigToJson(const ScorerConfig &cfg) {
  json j{{"scorer", ScorerKindName(cfg.kind)}, {"lambda", cfg.lambda}};
  if (!cfg.matrix_path.empty()) j["matrix"] = cfg.matrix_path;
  if (!cfg.context_matrix_path.empty()) j["context_matrix"] = cfg.context_matrix_path;
  if (cfg.default_score) j["default_score"] = *cfg.default_score;
  return j;
}

ScorerConfig ScorerConfigFromJson(const json &j) {
  ScorerConfig cfg;
  if (j.contains("scorer")) cfg.kind = ParseScorerKind(j.at("scorer").get<std::string>());
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("matrix")) cfg.matrix_path = j.at("matrix").get<std::string>();
  if (j.contains("context_matrix")) {
    cfg.context_matrix_path = j.at("context_matrix").get<std::string>();
  }
  if (j.contains("default_score") && !j.at("default_score").is_null()) {
    cfg.default_score = j.at("default_score").get<double>();
  }
  return cfg;
}

// ScorerFactory

namespace {

std::shared_ptr<const ScoreMatrix> LoadMatrix(const std::string &path,
                                              std::optional<double> fallback) {
  auto matrix = std::make_shared<ScoreMatrix>(ScoreMatrix::LoadFile(path));
  if (fallback) matrix->set_default_score(fallback);
  return matrix;
}

}  // namespace

ScorerFactory::ScorerFactory(ScorerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind == ScorerKind::kMatrix || cfg_.kind == ScorerKind::kCombined) {
    if (cfg_.matrix_path.empty()) {
      throw ValidationError("scorer '" + ScorerKindName(cfg_.kind) +
                            "' requires a score matrix file");
    }
    matrix_ = LoadMatrix(cfg_.matrix_path, cfg_.default_score);
  }
  if (cfg_.kind == ScorerKind::kCombined) {
    if (cfg_.context_matrix_path.empty()) {
      throw ValidationError(
          "scorer 'combined' requires a context score matrix file");
    }
    context_matrix_ = LoadMatrix(cfg_.context_matrix_path, cfg_.default_score);
  }
  Check();
}

ScorerFactory::ScorerFactory(ScorerConfig cfg,
                             std::shared_ptr<const ScoreMatrix> matrix,
                             std::shared_ptr<const ScoreMatrix> context_matrix)
    : cfg_(std::move(cfg)),
      matrix_(std::move(matrix)),
      context_matrix_(std::move(context_matrix)) {
  Check();
}

void ScorerFactory::Check() const {
  ValidateLambda({cfg_.lambda});
  if ((cfg_.kind == ScorerKind::kMatrix || cfg_.kind == ScorerKind::kCombined) &&
      !matrix_) {
    throw ValidationError("scorer '" + ScorerKindName(cfg_.kind) +
                          "' requires a score matrix");
  }
  if (cfg_.kind == ScorerKind::kCombined && !context_matrix_) {
    throw ValidationError("scorer 'combined' requires a context score matrix");
  }
}

ScorerFactory ScorerFactory::WithLambda(double lambda) const {
  ScorerConfig cfg = cfg_;
  cfg.lambda = lambda;
  return ScorerFactory(std::move(cfg), matrix_, context_matrix_);
}

std::unique_ptr<PairwiseScorer> ScorerFactory::Make(uint64_t run_seed) const {
  switch (cfg_.kind) {
    case ScorerKind::kLemma:
      return std::make_unique<LemmaScorer>(LambdaConfig{cfg_.lambda});
    case ScorerKind::kMatrix:
      return std::make_unique<MatrixScorer>(matrix_);
    case ScorerKind::kCombined:
      return std::make_unique<CombinedScorer>(matrix_, context_matrix_,
                                              LambdaConfig{cfg_.lambda});
    case ScorerKind::kRandom:
      return std::make_unique<RandomScorer>(DeriveSeed(run_seed, kScorerStream));
  }
  throw std::logic_error("unhandled scorer kind");
}

}  // namespace ecranno
