#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "ecranno/errors.h"
#include "ecranno/metrics.h"
#include "support/synthetic.h"

using namespace ecranno;

namespace {

TargetRecord Hit(int64_t presented, int64_t rank) {
  return {"t", presented, rank, true, rank};
}

TargetRecord Miss(int64_t presented, bool eligible) {
  return {"t", presented, std::nullopt, eligible, presented};
}

std::vector<std::string> Lines(const std::string &text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("recall") {
  std::vector<TargetRecord> records;
  for (int i = 0; i < 9; ++i) records.push_back(Hit(3, 1));
  records.push_back(Miss(2, true));
  records.push_back(Miss(0, false));
  CHECK(Recall(records) == doctest::Approx(0.9));

  CHECK(Recall({}) == 1.0);
  CHECK(Recall({Miss(0, false), Miss(1, false)}) == 1.0);
}

TEST_CASE("recall matches a direct recount on random records") {
  testing::Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TargetRecord> records;
    int eligible = 0, hits = 0;
    int64_t comparisons = 0;
    int n = static_cast<int>(rng.Below(30));
    for (int i = 0; i < n; ++i) {
      int64_t presented = static_cast<int64_t>(rng.Below(6));
      bool elig = rng.Below(2) == 1;
      if (elig && presented > 0 && rng.Below(2) == 1) {
        int64_t rank = 1 + static_cast<int64_t>(rng.Below(presented));
        records.push_back(Hit(presented, rank));
        ++hits;
        comparisons += rank;
      } else {
        records.push_back(Miss(presented, elig));
        comparisons += presented;
      }
      eligible += elig;
    }
    double expected = eligible == 0 ? 1.0 : static_cast<double>(hits) / eligible;
    CHECK(Recall(records) == expected);
    CHECK(Comparisons(records) == comparisons);
  }
}

TEST_CASE("comparisons") {
  CHECK(Comparisons({Hit(3, 2)}) == 2);
  CHECK(Comparisons({}) == 0);
  CHECK(Comparisons({Hit(2, 2), Miss(4, true), Hit(5, 1)}) == 7);
}

TEST_CASE("record json round trip") {
  TargetRecord hit = Hit(4, 3);
  CHECK(RecordFromJson(RecordToJson(hit)) == hit);
  TargetRecord miss = Miss(2, true);
  CHECK(RecordToJson(miss)["hit_rank"].is_null());
  CHECK(RecordFromJson(RecordToJson(miss)) == miss);
}

TEST_CASE("curve export") {
  SUBCASE("single point") {
    std::ostringstream out;
    ExportCurves({{2.0, 0.5, 12, 5}}, CurveFormat::kCsv, out);
    auto lines = Lines(out.str());
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "k,recall,comparisons,replicates");
    CHECK(lines[1] == "2,0.500000,12,5");
  }

  SUBCASE("empty curve is header only") {
    std::ostringstream out;
    ExportCurves({}, CurveFormat::kCsv, out);
    CHECK(Lines(out.str()) == std::vector<std::string>{"k,recall,comparisons,replicates"});
    std::ostringstream js;
    ExportCurves({}, CurveFormat::kJson, js);
    CHECK(nlohmann::json::parse(js.str()) == nlohmann::json::array());
  }

  SUBCASE("rows are sorted by k") {
    std::ostringstream out;
    ExportCurves({{3.5, 1.0, 9.25, 2}, {2.0, 0.25, 4, 2}}, CurveFormat::kCsv, out);
    auto lines = Lines(out.str());
    REQUIRE(lines.size() == 3);
    CHECK(lines[1] == "2,0.250000,4,2");
    CHECK(lines[2] == "3.5,1.000000,9.25,2");
  }

  SUBCASE("37-point round trip in both formats") {
    testing::Rng rng(3);
    std::vector<CurvePoint> points;
    for (int i = 0; i < 37; ++i) {
      double recall = static_cast<double>(rng.Below(1000001)) / 1e6;
      double comparisons = static_cast<double>(rng.Below(100000)) / 8.0;
      points.push_back({2.0 + 0.5 * i, recall, comparisons, 5});
    }
    std::ostringstream csv;
    ExportCurves(points, CurveFormat::kCsv, csv);
    CHECK(Lines(csv.str()).size() == 38);
    std::istringstream csv_in(csv.str());
    CHECK(ParseCurvesCsv(csv_in) == points);

    std::ostringstream js;
    ExportCurves(points, CurveFormat::kJson, js);
    std::istringstream js_in(js.str());
    CHECK(ParseCurvesJson(js_in) == points);
  }
}

TEST_CASE("format helpers") {
  CHECK(FormatReal(2.0) == "2");
  CHECK(FormatReal(2.5) == "2.5");
  CHECK(FormatReal(0.1) == "0.1");
  CHECK(ParseCurveFormat("csv") == CurveFormat::kCsv);
  CHECK(ParseCurveFormat("json") == CurveFormat::kJson);
  CHECK_THROWS_AS(ParseCurveFormat("xml"), ValidationError);
  CHECK(CurveFormatForPath("out/curve.json") == CurveFormat::kJson);
  CHECK(CurveFormatForPath("curve.csv") == CurveFormat::kCsv);
  CHECK(CurveFormatForPath("-") == CurveFormat::kCsv);
}
