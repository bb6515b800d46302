#include <gtest/gtest.h>

#include <sstream>

#include "advfact/report.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::report;

namespace {

metrics::MetricsReport sample() {
  advfact::testing::AggregateShape shape{"e", 10, 6, 3, 2, 5, 4};
  return metrics::build_report(advfact::testing::records_for_shape(shape), {"engine", "mode"});
}

}  // namespace

TEST(Format, PercentAndPlain) {
  EXPECT_EQ(format_percent(0.4321), "43.2");
  EXPECT_EQ(format_percent(1.0), "100.0");
  EXPECT_EQ(format_percent(std::nullopt), "-");
  EXPECT_EQ(format_plain(3.25), "3.2");
  EXPECT_EQ(format_plain(std::nullopt), "-");
}

TEST(Csv, HeaderCommentsThenColumns) {
  auto csv = render_csv(sample(), {"run-1", "abc123"});
  std::istringstream in(csv);
  std::string line;
  bool saw_run = false, saw_note = false;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    saw_run |= line.find("run-1") != std::string::npos;
    saw_note |= line.find(kAsrNote) != std::string::npos;
  }
  EXPECT_TRUE(saw_run);
  EXPECT_TRUE(saw_note);
  EXPECT_EQ(line.rfind("engine,mode,", 0), 0u) << line;
  std::string row;
  ASSERT_TRUE(std::getline(in, row));
  EXPECT_EQ(row.rfind("e,", 0), 0u) << row;
  auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  EXPECT_EQ(commas(row), commas(line));
}

TEST(Markdown, TableHasRowPerGroup) {
  auto md = render_markdown(sample(), {"run-1", "abc123"});
  EXPECT_NE(md.find("| engine"), std::string::npos);
  EXPECT_NE(md.find("| e "), std::string::npos);
}

TEST(Json, FullPrecision) {
  auto j = json::parse(render_json(sample(), {"run-1", "abc123"}));
  EXPECT_EQ(j["header"]["run_id"], "run-1");
  double asr = j["report"]["rows"][0]["asr"].get<double>();
  EXPECT_DOUBLE_EQ(asr, 5.0 / 18);
}

TEST(Rendering, Deterministic) {
  EXPECT_EQ(render_csv(sample(), {"r", "d"}), render_csv(sample(), {"r", "d"}));
  EXPECT_EQ(render_json(sample(), {"r", "d"}), render_json(sample(), {"r", "d"}));
}
