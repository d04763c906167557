// Copyright 2026 The nattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "nattr/report_io.hpp"
#include "test_util.hpp"

namespace nattr {
namespace {

AblationReport sample_report() {
  AblationReport r;
  r.layer = "conv2";
  r.fraction = 0.1;
  r.methods = {"nig-n10", "deeplift-rescale"};
  Rng rng(4);
  for (Index i = 0; i < 6; ++i) {
    AblationRecord rec;
    rec.example_id = i;
    rec.actual_delta = rng.normal();
    for (int m = 0; m < 2; ++m) {
      rec.predicted_delta.push_back(rng.normal() / 3.0);
      rec.abs_error.push_back(std::abs(rec.actual_delta - rec.predicted_delta.back()));
    }
    r.records.push_back(rec);
  }
  r.records[3].failed = true;
  r.records[3].diagnostic = "non-finite score";
  r.records[3].predicted_delta = {0.0, 0.0};
  r.records[3].abs_error = {0.0, 0.0};
  r.records[1].predicted_delta[0] = -0.0;
  fill_aggregates(r);
  return r;
}

std::vector<ScoreRow> sample_scores() {
  std::vector<ScoreRow> rows;
  Rng rng(8);
  for (Index j = 0; j < 5; ++j) {
    rows.push_back({"relu1", j, "nig-n50", j % 2 ? Index{-1} : j, rng.normal() * 1e-7, 3, rng.normal() * 1e-12});
  }
  rows[2].score = 1.0 / 3.0;
  return rows;
}

TEST(FormatReal, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1e-17}) {
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
  EXPECT_EQ(format_real(-0.0), "0");
  EXPECT_THROW(format_real(std::numeric_limits<double>::infinity()), OutputError);
  EXPECT_THROW(format_real(std::numeric_limits<double>::quiet_NaN()), OutputError);
}

class ScoresRoundTrip : public ::testing::TestWithParam<OutputFormat> {};

TEST_P(ScoresRoundTrip, BitExact) {
  const auto dir = testing::temp_dir("scores");
  const auto rows = sample_scores();
  write_scores(rows, dir / "s", GetParam());
  const auto back = read_scores(dir / "s", GetParam());
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].layer, rows[i].layer);
    EXPECT_EQ(back[i].neuron, rows[i].neuron);
    EXPECT_EQ(back[i].method, rows[i].method);
    EXPECT_EQ(back[i].cls, rows[i].cls);
    EXPECT_EQ(back[i].score, rows[i].score);
    EXPECT_EQ(back[i].example_id, rows[i].example_id);
    EXPECT_EQ(back[i].completeness_residual, rows[i].completeness_residual);
  }
}

INSTANTIATE_TEST_SUITE_P(Formats, ScoresRoundTrip, ::testing::Values(OutputFormat::kCsv, OutputFormat::kJson));

TEST(Scores, CsvHeader) {
  const auto dir = testing::temp_dir("scores-header");
  write_scores(sample_scores(), dir / "s.csv", OutputFormat::kCsv);
  const std::string text = testing::read_file(dir / "s.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "layer,neuron_flat_index,method,class,score,example_id,completeness_residual");
}

TEST(Report, JsonRoundTripKeepsFailures) {
  const auto dir = testing::temp_dir("report-json");
  const auto report = sample_report();
  write_report(report, dir / "r.json", OutputFormat::kJson);
  const auto back = read_report(dir / "r.json", OutputFormat::kJson);
  EXPECT_EQ(back.layer, report.layer);
  EXPECT_EQ(back.fraction, report.fraction);
  EXPECT_EQ(back.methods, report.methods);
  ASSERT_EQ(back.records.size(), report.records.size());
  EXPECT_TRUE(back.records[3].failed);
  EXPECT_EQ(back.records[3].diagnostic, "non-finite score");
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    if (report.records[i].failed) continue;
    EXPECT_EQ(back.records[i].predicted_delta, report.records[i].predicted_delta);
    EXPECT_EQ(back.records[i].actual_delta, report.records[i].actual_delta);
    EXPECT_EQ(back.records[i].abs_error, report.records[i].abs_error);
  }
  EXPECT_EQ(back.mae, report.mae);
  EXPECT_EQ(back.failures, 1);
}

TEST(Report, CsvRoundTripDropsFailures) {
  const auto dir = testing::temp_dir("report-csv");
  const auto report = sample_report();
  write_report(report, dir / "r.csv", OutputFormat::kCsv);
  const std::string text = testing::read_file(dir / "r.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "example_id,method,predicted_delta,actual_delta,abs_error");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 5 * 2);
  const auto back = read_report(dir / "r.csv", OutputFormat::kCsv);
  EXPECT_EQ(back.count, 5);
  EXPECT_EQ(back.mae, report.mae);
}

TEST(Report, CsvAndJsonCarryTheSameNumbers) {
  const auto dir = testing::temp_dir("report-both");
  const auto report = sample_report();
  write_report(report, dir / "r.csv", OutputFormat::kCsv);
  write_report(report, dir / "r.json", OutputFormat::kJson);
  auto numbers = [](const AblationReport& r) {
    std::vector<double> out;
    for (const auto& rec : r.records) {
      if (rec.failed) continue;
      out.push_back(rec.actual_delta);
      out.insert(out.end(), rec.predicted_delta.begin(), rec.predicted_delta.end());
      out.insert(out.end(), rec.abs_error.begin(), rec.abs_error.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(numbers(read_report(dir / "r.csv", OutputFormat::kCsv)),
            numbers(read_report(dir / "r.json", OutputFormat::kJson)));
}

TEST(Report, EmptyReportIsHeaderOnly) {
  const auto dir = testing::temp_dir("report-empty");
  AblationReport empty;
  empty.layer = "conv1";
  empty.fraction = 0.1;
  empty.methods = {"gradxdiff"};
  fill_aggregates(empty);
  write_report(empty, dir / "r.csv", OutputFormat::kCsv);
  EXPECT_EQ(testing::read_file(dir / "r.csv"), "example_id,method,predicted_delta,actual_delta,abs_error\n");
  const auto back = read_report(dir / "r.csv", OutputFormat::kCsv);
  EXPECT_TRUE(back.records.empty());
}

TEST(Report, UnwritablePath) {
  EXPECT_THROW(write_report(sample_report(), "/nonexistent/dir/r.csv", OutputFormat::kCsv), OutputError);
  EXPECT_THROW(write_scores(sample_scores(), "/nonexistent/dir/s.csv", OutputFormat::kCsv), OutputError);
  EXPECT_THROW(read_report("/nonexistent/dir/r.csv", OutputFormat::kCsv), std::runtime_error);
}

}  // namespace
}  // namespace nattr
