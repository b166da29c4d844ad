// Command-line entry point: corpus validation and statistics, gold-driven
// simulation, k sweeps, lambda tuning and the annotation server.
//
// Exit codes: 0 ok, 1 runtime error (I/O, score lookup), 2 validation error
// (bad corpus, score file or flag value), 3 usage error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ecranno/corpus.h"
#include "ecranno/errors.h"
#include "ecranno/http_server.h"
#include "ecranno/metrics.h"
#include "ecranno/scorers.h"
#include "ecranno/service.h"
#include "ecranno/simulator.h"

namespace {

using namespace ecranno;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitUsage = 3;

struct ScorerFlags {
  std::string scorer = "lemma";
  std::string matrix;
  std::string context_matrix;
  std::optional<double> default_score;
  double lambda = 0.7;

  void Register(CLI::App *cmd) {
    cmd->add_option("--scorer", scorer, "Pairwise scorer")
        ->check(CLI::IsMember({"lemma", "matrix", "combined", "random"}))
        ->capture_default_str();
    cmd->add_option("--matrix", matrix,
                    "Pair-score file (matrix scorer; trigger-level scores for "
                    "the combined scorer)");
    cmd->add_option("--context-matrix", context_matrix,
                    "Context-level pair-score file (combined scorer)");
    cmd->add_option("--default-score", default_score,
                    "Score for pairs missing from the score files");
    cmd->add_option("--lambda", lambda,
                    "Trigger weight for the lemma and combined scorers")
        ->capture_default_str();
  }

  ScorerConfig Config() const {
    ScorerConfig cfg;
    cfg.kind = ParseScorerKind(scorer);
    cfg.lambda = lambda;
    cfg.matrix_path = matrix;
    cfg.context_matrix_path = context_matrix;
    cfg.default_score = default_score;
    if (!matrix.empty() && cfg.kind != ScorerKind::kMatrix &&
        cfg.kind != ScorerKind::kCombined) {
      throw ValidationError("--matrix is only used by the matrix and combined scorers");
    }
    if (!context_matrix.empty() && cfg.kind != ScorerKind::kCombined) {
      throw ValidationError("--context-matrix is only used by the combined scorer");
    }
    return cfg;
  }
};

struct GridFlags {
  double k_min = 2.0;
  double k_max = 20.0;
  double k_step = 0.5;

  void Register(CLI::App *cmd) {
    cmd->add_option("--k-min", k_min, "Smallest k")->capture_default_str();
    cmd->add_option("--k-max", k_max, "Largest k")->capture_default_str();
    cmd->add_option("--k-step", k_step, "k increment")->capture_default_str();
  }
};

// Writes to `path`, or stdout for "" and "-".
void WriteOutput(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<double> ParseLambdaGrid(const std::string &spec) {
  std::vector<double> parts;
  std::stringstream in(spec);
  std::string field;
  while (std::getline(in, field, ':')) {
    try {
      size_t used = 0;
      parts.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception &) {
      throw ValidationError("invalid --lambda-grid '" + spec +
                            "' (expected start:stop:step or a single value)");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) {
    throw ValidationError("invalid --lambda-grid '" + spec +
                          "' (expected start:stop:step or a single value)");
  }
  return MakeGrid(parts[0], parts[1], parts[2]);
}

TopicPartition LoadPartition(const std::string &path, TopicKey key) {
  std::vector<std::string> warnings;
  std::vector<Mention> mentions = LoadMentions(path, {&warnings});
  for (const std::string &w : warnings) std::cerr << "warning: " << w << '\n';
  RequireGoldLabels(mentions);
  return PartitionByTopic(mentions, key);
}

HttpServer *g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Event-coreference annotation engine: candidate ranking, "
               "top-k pruning, recall/effort simulation and annotation server"};
  app.require_subcommand(1);

  std::string topic_key = "topic";
  app.add_option("--topic-key", topic_key,
                 "Mention field that scopes candidates and pair counts")
      ->check(CLI::IsMember({"topic", "subtopic"}))
      ->capture_default_str();

  // validate
  std::string validate_path;
  auto *validate = app.add_subcommand("validate", "Parse a corpus and check its invariants");
  validate->add_option("corpus", validate_path, "Mention JSONL file")->required();

  // stats
  std::string stats_path;
  bool stats_json = false;
  auto *stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("corpus", stats_path, "Mention JSONL file")->required();
  stats->add_flag("--json", stats_json, "Print JSON instead of a table");

  // simulate
  std::string sim_corpus;
  ScorerFlags sim_scorer;
  double sim_k = 0;
  uint64_t sim_seed = 0;
  bool sim_repair = false;
  bool sim_no_records = false;
  auto *simulate = app.add_subcommand("simulate", "Run one gold-driven annotation simulation");
  simulate->add_option("--corpus", sim_corpus, "Mention JSONL file with gold labels")
      ->required();
  sim_scorer.Register(simulate);
  simulate->add_option("--k", sim_k, "Candidates presented per target (may be fractional)")
      ->required();
  simulate->add_option("--seed", sim_seed, "Seed for all randomness")->capture_default_str();
  simulate->add_flag("--oracle-repair", sim_repair,
                     "On a miss, merge the target into its gold cluster instead "
                     "of starting a new one");
  simulate->add_flag("--no-records", sim_no_records, "Omit per-target records");

  // sweep
  std::string sweep_corpus;
  ScorerFlags sweep_scorer;
  GridFlags sweep_grid;
  int sweep_replicates = 5;
  uint64_t sweep_seed = 0;
  bool sweep_repair = false;
  std::string sweep_out = "-";
  std::string sweep_format;
  auto *sweep = app.add_subcommand("sweep", "Recall/comparisons curve over a k grid");
  sweep->add_option("--corpus", sweep_corpus, "Mention JSONL file with gold labels")
      ->required();
  sweep_scorer.Register(sweep);
  sweep_grid.Register(sweep);
  sweep->add_option("--replicates", sweep_replicates, "Runs per k (seeds seed..seed+n-1)")
      ->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "Base seed")->capture_default_str();
  sweep->add_flag("--oracle-repair", sweep_repair, "See simulate --oracle-repair");
  sweep->add_option("--out", sweep_out, "Output file, - for stdout")->capture_default_str();
  sweep->add_option("--format", sweep_format, "csv or json (default: from --out suffix)")
      ->check(CLI::IsMember({"csv", "json"}));

  // tune-lambda
  std::string tune_corpus;
  ScorerFlags tune_scorer;
  GridFlags tune_grid;
  std::string lambda_grid = "0:1:0.1";
  int tune_replicates = 5;
  uint64_t tune_seed = 0;
  std::string tune_out = "-";
  auto *tune = app.add_subcommand("tune-lambda",
                                  "Pick the trigger weight with the best recall/effort curve");
  tune->add_option("--corpus", tune_corpus, "Development corpus with gold labels")
      ->required();
  tune_scorer.Register(tune);
  tune_grid.Register(tune);
  tune->add_option("--lambda-grid", lambda_grid, "start:stop:step or a single value")
      ->capture_default_str();
  tune->add_option("--replicates", tune_replicates, "Runs per k")->capture_default_str();
  tune->add_option("--seed", tune_seed, "Base seed")->capture_default_str();
  tune->add_option("--out", tune_out, "Report file, - for stdout")->capture_default_str();

  // serve
  std::string serve_corpus;
  ScorerFlags serve_scorer;
  double serve_k = 2.0;
  uint64_t serve_seed = 0;
  int serve_port = 8080;
  std::string serve_host = "127.0.0.1";
  std::string serve_state = "state";
  auto *serve = app.add_subcommand("serve", "Serve annotation sessions over HTTP");
  serve->add_option("--corpus", serve_corpus, "Default corpus for new sessions");
  serve_scorer.Register(serve);
  serve->add_option("--k", serve_k, "Default k for new sessions")->capture_default_str();
  serve->add_option("--seed", serve_seed, "Default seed for new sessions")
      ->capture_default_str();
  serve->add_option("--port", serve_port, "Listen port")->capture_default_str();
  serve->add_option("--host", serve_host, "Listen address")->capture_default_str();
  serve->add_option("--state", serve_state, "Session state directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const TopicKey key = ParseTopicKey(topic_key);

    if (*validate) {
      std::vector<std::string> warnings;
      std::vector<Mention> mentions = LoadMentions(validate_path, {&warnings});
      for (const std::string &w : warnings) std::cerr << "warning: " << w << '\n';
      TopicPartition partition = PartitionByTopic(mentions, key);
      size_t labeled = 0;
      for (const Mention &m : mentions) labeled += m.gold_cluster_id ? 1 : 0;
      std::cout << "ok: " << mentions.size() << " mentions, " << partition.size()
                << " topics, " << labeled << " with gold labels\n";
      if (labeled != 0 && labeled != mentions.size()) {
        std::cerr << "warning: only " << labeled << " of " << mentions.size()
                  << " mentions carry gold labels; simulation needs all\n";
      }
      return kExitOk;
    }

    if (*stats) {
      CorpusStats s = ComputeCorpusStats(LoadMentions(stats_path), key);
      if (stats_json) {
        std::cout << StatsToJson(s).dump(2) << '\n';
      } else {
        std::printf("T   %lld\nD   %lld\nM   %lld\nC   %lld\nS   %lld\nP   %lld\nP+  %lld\n",
                    static_cast<long long>(s.topics), static_cast<long long>(s.documents),
                    static_cast<long long>(s.mentions), static_cast<long long>(s.clusters),
                    static_cast<long long>(s.singletons),
                    static_cast<long long>(s.pairs_within_topic),
                    static_cast<long long>(s.positive_pairs));
      }
      return kExitOk;
    }

    if (*simulate) {
      ScorerFactory factory(sim_scorer.Config());
      TopicPartition partition = LoadPartition(sim_corpus, key);
      SimulationOptions options{key, sim_repair};
      RunResult result = RunSimulation(partition, factory, sim_k, sim_seed, options);
      std::cout << RunResultToJson(result, !sim_no_records).dump(2) << '\n';
      return kExitOk;
    }

    if (*sweep) {
      ScorerFactory factory(sweep_scorer.Config());
      TopicPartition partition = LoadPartition(sweep_corpus, key);
      std::vector<double> grid =
          MakeGrid(sweep_grid.k_min, sweep_grid.k_max, sweep_grid.k_step);
      std::vector<CurvePoint> points = SweepK(partition, factory, grid, sweep_replicates,
                                              sweep_seed, {key, sweep_repair});
      CurveFormat format = sweep_format.empty() ? CurveFormatForPath(sweep_out)
                                                : ParseCurveFormat(sweep_format);
      std::ostringstream text;
      ExportCurves(points, format, text);
      WriteOutput(sweep_out, text.str());
      return kExitOk;
    }

    if (*tune) {
      ScorerFactory factory(tune_scorer.Config());
      TopicPartition partition = LoadPartition(tune_corpus, key);
      LambdaTuning tuning = TuneLambda(
          partition, factory, ParseLambdaGrid(lambda_grid),
          MakeGrid(tune_grid.k_min, tune_grid.k_max, tune_grid.k_step), tune_replicates,
          tune_seed, {key, false});
      nlohmann::json report = LambdaTuningToJson(tuning);
      report["scorer"] = tune_scorer.scorer;
      report["replicates"] = tune_replicates;
      report["seed"] = tune_seed;
      WriteOutput(tune_out, report.dump(2) + "\n");
      std::cerr << "lambda* = " << FormatReal(tuning.lambda_star) << '\n';
      return kExitOk;
    }

    if (*serve) {
      SessionConfig defaults;
      defaults.corpus_path = serve_corpus;
      defaults.scorer = serve_scorer.Config();
      defaults.prune = {serve_k, serve_seed};
      defaults.topic_key = key;
      ValidatePruneConfig(defaults.prune);
      ValidateLambda({defaults.scorer.lambda});

      AnnotationService service(serve_state, defaults);
      for (const std::string &w : service.restore_warnings()) {
        std::cerr << "warning: " << w << '\n';
      }
      HttpServer server(service);
      g_server = &server;
      std::signal(SIGINT, HandleSignal);
      std::signal(SIGTERM, HandleSignal);
      std::cerr << "listening on " << serve_host << ':' << serve_port << '\n';
      if (!server.Listen(serve_host, serve_port)) {
        std::cerr << "error: cannot listen on " << serve_host << ':' << serve_port << '\n';
        return kExitRuntime;
      }
      return kExitOk;
    }
  } catch (const ValidationError &e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
