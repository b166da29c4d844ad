#include "ecranno/metrics.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ecranno/errors.h"

namespace ecranno {

using nlohmann::json;

json RecordToJson(const TargetRecord &r) {
  return json{{"target_id", r.target_id},
              {"presented_count", r.presented_count},
              {"hit_rank", r.hit_rank ? json(*r.hit_rank) : json(nullptr)},
              {"had_coreferent_in_store", r.had_coreferent_in_store},
              {"comparisons", r.comparisons}};
}

TargetRecord RecordFromJson(const json &j) {
  TargetRecord r;
  r.target_id = j.at("target_id").get<std::string>();
  r.presented_count = j.at("presented_count").get<int64_t>();
  if (!j.at("hit_rank").is_null()) r.hit_rank = j.at("hit_rank").get<int64_t>();
  r.had_coreferent_in_store = j.at("had_coreferent_in_store").get<bool>();
  r.comparisons = j.at("comparisons").get<int64_t>();
  return r;
}

double Recall(const std::vector<TargetRecord> &records) {
  int64_t eligible = 0;
  int64_t hits = 0;
  for (const TargetRecord &r : records) {
    if (!r.had_coreferent_in_store) continue;
    ++eligible;
    if (r.hit_rank) ++hits;
  }
  if (eligible == 0) return 1.0;
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

int64_t Comparisons(const std::vector<TargetRecord> &records) {
  int64_t total = 0;
  for (const TargetRecord &r : records) total += r.comparisons;
  return total;
}

std::string FormatReal(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

CurveFormat ParseCurveFormat(const std::string &name) {
  if (name == "csv") return CurveFormat::kCsv;
  if (name == "json") return CurveFormat::kJson;
  throw ValidationError("unknown curve format '" + name + "' (expected csv or json)");
}

CurveFormat CurveFormatForPath(const std::string &path) {
  const std::string suffix = ".json";
  if (path.size() >= suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return CurveFormat::kJson;
  }
  return CurveFormat::kCsv;
}

void ExportCurves(std::vector<CurvePoint> points, CurveFormat format,
                  std::ostream &out) {
  std::stable_sort(points.begin(), points.end(),
                   [](const CurvePoint &a, const CurvePoint &b) { return a.k < b.k; });
  if (format == CurveFormat::kJson) {
    json arr = json::array();
    for (const CurvePoint &p : points) {
      arr.push_back({{"k", p.k},
                     {"recall", p.recall},
                     {"comparisons", p.comparisons},
                     {"replicates", p.replicates}});
    }
    out << arr.dump(2) << '\n';
    return;
  }
  out << "k,recall,comparisons,replicates\n";
  char recall[32];
  for (const CurvePoint &p : points) {
    std::snprintf(recall, sizeof(recall), "%.6f", p.recall);
    out << FormatReal(p.k) << ',' << recall << ',' << FormatReal(p.comparisons)
        << ',' << p.replicates << '\n';
  }
}

void ExportCurvesToFile(const std::vector<CurvePoint> &points, CurveFormat format,
                        const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  ExportCurves(points, format, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

double ParseDouble(const std::string &text, size_t line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("invalid number '" + text + "'", line);
  }
  return value;
}

}  // namespace

std::vector<CurvePoint> ParseCurvesCsv(std::istream &in) {
  std::vector<CurvePoint> points;
  std::string text;
  size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line == 1) {
      if (text != "k,recall,comparisons,replicates") {
        throw ValidationError("unexpected curve header", line);
      }
      continue;
    }
    if (text.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(text);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 4) throw ValidationError("expected 4 fields", line);
    CurvePoint p;
    p.k = ParseDouble(fields[0], line);
    p.recall = ParseDouble(fields[1], line);
    p.comparisons = ParseDouble(fields[2], line);
    p.replicates = static_cast<int64_t>(ParseDouble(fields[3], line));
    points.push_back(p);
  }
  return points;
}

std::vector<CurvePoint> ParseCurvesJson(std::istream &in) {
  std::vector<CurvePoint> points;
  json arr = json::parse(in);
  for (const json &j : arr) {
    points.push_back({j.at("k").get<double>(), j.at("recall").get<double>(),
                      j.at("comparisons").get<double>(),
                      j.at("replicates").get<int64_t>()});
  }
  return points;
}

}  // namespace ecranno
