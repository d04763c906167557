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

#ifndef NATTR_REPORT_IO_HPP
#define NATTR_REPORT_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nattr/ablation.hpp"
#include "nattr/attribution.hpp"

namespace nattr {

enum class OutputFormat { kCsv, kJson };

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One attribution score. Scores CSV columns, in order:
///   layer,neuron_flat_index,method,class,score,example_id,completeness_residual
/// `cls` is -1 when the scores explain a single resolved target.
struct ScoreRow {
  std::string layer;
  Index neuron = 0;
  std::string method;
  Index cls = -1;
  double score = 0.0;
  Index example_id = 0;
  double completeness_residual = 0.0;
};

/// Shortest text that parses back to the same double (17 significant digits);
/// negative zero is written as 0.
std::string format_real(double v);

/// Rows for every neuron of one result.
std::vector<ScoreRow> score_rows(const AttributionResult& result, Index example_id = 0, Index cls = -1);

void write_scores(const std::vector<ScoreRow>& rows, const std::filesystem::path& path, OutputFormat format);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path, OutputFormat format);

/// Report CSV: one row per (example, method) with columns
///   example_id,method,predicted_delta,actual_delta,abs_error
/// Failed examples are left out of the CSV; the JSON form keeps them with
/// their diagnostic and also carries the aggregates.
void write_report(const AblationReport& report, const std::filesystem::path& path, OutputFormat format);
AblationReport read_report(const std::filesystem::path& path, OutputFormat format);

/// JSON object for a report (used for multi-layer study files).
std::string report_json(const AblationReport& report);

}  // namespace nattr

#endif  // NATTR_REPORT_IO_HPP
