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

#include "nattr/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nattr {
namespace {

using json = nlohmann::json;

constexpr const char* kScoreHeader = "layer,neuron_flat_index,method,class,score,example_id,completeness_residual";
constexpr const char* kReportHeader = "example_id,method,predicted_delta,actual_delta,abs_error";

double clean(double v) { return v == 0.0 ? 0.0 : v; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw OutputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw OutputError("malformed number '" + s + "'");
  return v;
}

Index parse_index(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw OutputError("malformed integer '" + s + "'");
  return static_cast<Index>(v);
}

// Data lines of a CSV after checking the header.
std::vector<std::vector<std::string>> csv_rows(const std::filesystem::path& path, const char* header,
                                               std::size_t columns) {
  std::istringstream in(slurp(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw OutputError("'" + path.string() + "' does not start with the expected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != columns) {
      throw OutputError("'" + path.string() + "': row has " + std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(columns));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

json report_to_json(const AblationReport& report) {
  json j;
  j["layer"] = report.layer;
  j["fraction"] = clean(report.fraction);
  j["methods"] = report.methods;
  j["records"] = json::array();
  for (const auto& rec : report.records) {
    if (rec.failed) {
      j["records"].push_back({{"example_id", rec.example_id}, {"failed", true}, {"diagnostic", rec.diagnostic}});
      continue;
    }
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      j["records"].push_back({{"example_id", rec.example_id},
                              {"method", report.methods[m]},
                              {"predicted_delta", clean(rec.predicted_delta[m])},
                              {"actual_delta", clean(rec.actual_delta)},
                              {"abs_error", clean(rec.abs_error[m])}});
    }
  }
  json mae = json::object();
  for (std::size_t m = 0; m < report.methods.size(); ++m) mae[report.methods[m]] = clean(report.mae[m]);
  json pairwise = json::array();
  for (const auto& p : report.pairwise) {
    pairwise.push_back({{"method_a", p.method_a},
                        {"method_b", p.method_b},
                        {"u_statistic", clean(p.u_statistic)},
                        {"p_value", clean(p.p_value)}});
  }
  j["aggregates"] = {{"mae", mae}, {"count", report.count}, {"failures", report.failures}, {"pairwise", pairwise}};
  return j;
}

// Groups flat (example, method) rows back into per-example records.
void add_row(AblationReport& report, Index example_id, const std::string& method, double predicted, double actual,
             double abs_error) {
  std::size_t m = 0;
  while (m < report.methods.size() && report.methods[m] != method) ++m;
  if (m == report.methods.size()) report.methods.push_back(method);
  if (report.records.empty() || report.records.back().example_id != example_id) {
    AblationRecord rec;
    rec.example_id = example_id;
    rec.actual_delta = actual;
    report.records.push_back(std::move(rec));
  }
  auto& rec = report.records.back();
  if (rec.predicted_delta.size() != m) throw OutputError("report rows are not grouped by example in method order");
  rec.predicted_delta.push_back(predicted);
  rec.abs_error.push_back(abs_error);
}

}  // namespace

std::string format_real(double v) {
  if (!std::isfinite(v)) throw OutputError("refusing to serialise a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", clean(v));
  return buf;
}

std::vector<ScoreRow> score_rows(const AttributionResult& result, Index example_id, Index cls) {
  std::vector<ScoreRow> rows;
  rows.reserve(static_cast<std::size_t>(result.scores.size()));
  for (Index j = 0; j < result.scores.size(); ++j) {
    rows.push_back({result.layer, j, std::string(method_name(result.method)), cls, result.scores[j], example_id,
                    result.completeness_residual});
  }
  return rows;
}

void write_scores(const std::vector<ScoreRow>& rows, const std::filesystem::path& path, OutputFormat format) {
  auto out = open_out(path);
  if (format == OutputFormat::kCsv) {
    out << kScoreHeader << '\n';
    for (const auto& r : rows) {
      out << r.layer << ',' << r.neuron << ',' << r.method << ',' << r.cls << ',' << format_real(r.score) << ','
          << r.example_id << ',' << format_real(r.completeness_residual) << '\n';
    }
  } else {
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"layer", r.layer},
                   {"neuron_flat_index", r.neuron},
                   {"method", r.method},
                   {"class", r.cls},
                   {"score", clean(r.score)},
                   {"example_id", r.example_id},
                   {"completeness_residual", clean(r.completeness_residual)}});
    }
    out << j.dump(1) << '\n';
  }
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

std::vector<ScoreRow> read_scores(const std::filesystem::path& path, OutputFormat format) {
  std::vector<ScoreRow> rows;
  if (format == OutputFormat::kCsv) {
    for (const auto& f : csv_rows(path, kScoreHeader, 7)) {
      rows.push_back({f[0], parse_index(f[1]), f[2], parse_index(f[3]), parse_real(f[4]), parse_index(f[5]),
                      parse_real(f[6])});
    }
    return rows;
  }
  try {
    for (const auto& e : json::parse(slurp(path))) {
      rows.push_back({e.at("layer").get<std::string>(), e.at("neuron_flat_index").get<Index>(),
                      e.at("method").get<std::string>(), e.at("class").get<Index>(), e.at("score").get<double>(),
                      e.at("example_id").get<Index>(), e.at("completeness_residual").get<double>()});
    }
  } catch (const json::exception& e) {
    throw OutputError("'" + path.string() + "': " + e.what());
  }
  return rows;
}

std::string report_json(const AblationReport& report) { return report_to_json(report).dump(1); }

void write_report(const AblationReport& report, const std::filesystem::path& path, OutputFormat format) {
  auto out = open_out(path);
  if (format == OutputFormat::kCsv) {
    out << kReportHeader << '\n';
    for (const auto& rec : report.records) {
      if (rec.failed) continue;
      for (std::size_t m = 0; m < report.methods.size(); ++m) {
        out << rec.example_id << ',' << report.methods[m] << ',' << format_real(rec.predicted_delta[m]) << ','
            << format_real(rec.actual_delta) << ',' << format_real(rec.abs_error[m]) << '\n';
      }
    }
  } else {
    out << report_json(report) << '\n';
  }
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

AblationReport read_report(const std::filesystem::path& path, OutputFormat format) {
  AblationReport report;
  if (format == OutputFormat::kCsv) {
    for (const auto& f : csv_rows(path, kReportHeader, 5)) {
      add_row(report, parse_index(f[0]), f[1], parse_real(f[2]), parse_real(f[3]), parse_real(f[4]));
    }
    fill_aggregates(report);
    return report;
  }
  try {
    const json j = json::parse(slurp(path));
    report.layer = j.at("layer").get<std::string>();
    report.fraction = j.at("fraction").get<double>();
    report.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& e : j.at("records")) {
      if (e.value("failed", false)) {
        AblationRecord rec;
        rec.example_id = e.at("example_id").get<Index>();
        rec.failed = true;
        rec.diagnostic = e.at("diagnostic").get<std::string>();
        rec.predicted_delta.assign(report.methods.size(), 0.0);
        rec.abs_error.assign(report.methods.size(), 0.0);
        report.records.push_back(std::move(rec));
        continue;
      }
      add_row(report, e.at("example_id").get<Index>(), e.at("method").get<std::string>(),
              e.at("predicted_delta").get<double>(), e.at("actual_delta").get<double>(),
              e.at("abs_error").get<double>());
    }
  } catch (const json::exception& e) {
    throw OutputError("'" + path.string() + "': " + e.what());
  }
  fill_aggregates(report);
  return report;
}

}  // namespace nattr
