#ifndef ECRANNO_METRICS_H_
#define ECRANNO_METRICS_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace ecranno {

// Trace of one simulated (or human) annotation step.
struct TargetRecord {
  std::string target_id;
  int64_t presented_count = 0;
  std::optional<int64_t> hit_rank;
  bool had_coreferent_in_store = false;
  int64_t comparisons = 0;

  bool operator==(const TargetRecord &other) const = default;
};

nlohmann::json RecordToJson(const TargetRecord &r);
TargetRecord RecordFromJson(const nlohmann::json &j);

// Hits over targets that had a coreferent cluster in the store; 1.0 when
// no target did.
double Recall(const std::vector<TargetRecord> &records);

// Total candidate-target inspections.
int64_t Comparisons(const std::vector<TargetRecord> &records);

// One sample of the recall/effort tradeoff, averaged over replicates.
struct CurvePoint {
  double k = 0.0;
  double recall = 0.0;
  double comparisons = 0.0;
  int64_t replicates = 1;

  bool operator==(const CurvePoint &other) const = default;
};

enum class CurveFormat { kCsv, kJson };

CurveFormat ParseCurveFormat(const std::string &name);
// kJson for a ".json" suffix, otherwise kCsv.
CurveFormat CurveFormatForPath(const std::string &path);

// CSV header `k,recall,comparisons,replicates`, recall with 6 decimals,
// rows sorted by k. JSON is an array of objects with the same fields.
void ExportCurves(std::vector<CurvePoint> points, CurveFormat format,
                  std::ostream &out);
void ExportCurvesToFile(const std::vector<CurvePoint> &points, CurveFormat format,
                        const std::string &path);

std::vector<CurvePoint> ParseCurvesCsv(std::istream &in);
std::vector<CurvePoint> ParseCurvesJson(std::istream &in);

// Shortest decimal text that parses back to `value`.
std::string FormatReal(double value);

}  // namespace ecranno

#endif  // ECRANNO_METRICS_H_
