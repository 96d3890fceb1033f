#pragma once

#include <string>
#include <utility>
#include <vector>

#include "krlab/config.hpp"

namespace krlab {

// Plot-ready numeric table. Column 0 is the independent variable of the
// series (t, m, k, or an s-index); headers are stable identifiers. The
// rendered bytes are deterministic: shortest round-trip decimal per cell,
// '\n' line ends, no locale dependence.
struct CsvTable {
  std::string name;  // file stem, written as <name>.csv
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

std::string csv_to_string(const CsvTable& table);

enum class AssertionStatus { pass, fail, skipped };

// One checked claim: value <relation> threshold. Skipped entries document
// checks that the configuration excluded, never silent omissions.
struct Assertion {
  std::string name;
  AssertionStatus status = AssertionStatus::fail;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", "<", ">", "in" (detail carries range)
  std::string detail;
};

Assertion check_le(const std::string& name, double value, double threshold);
Assertion check_ge(const std::string& name, double value, double threshold);
Assertion check_lt(const std::string& name, double value, double threshold);
Assertion check_gt(const std::string& name, double value, double threshold);
Assertion check_in(const std::string& name, double value, double lo, double hi);

struct ExperimentReport {
  std::string scenario;
  ExperimentConfig config;
  std::vector<CsvTable> tables;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Assertion> assertions;
  double wall_time_seconds = 0.0;

  void metric(const std::string& name, double value);
  bool passed() const;  // no assertion failed (skipped entries do not fail)
};

// Serialize the summary (config echo, metrics, assertions, csv list,
// wall time, artifact version). Everything except wall_time_seconds is
// reproducible bit-for-bit for identical configs.
std::string summary_to_json(const ExperimentReport& report);

// Write <name>.csv per table plus summary.json under report.config.output_dir
// (created if needed); returns the summary path.
std::string write_report(const ExperimentReport& report);

// Field-wise comparison of two written summaries (and their CSV files),
// ignoring wall time. rel_tol bounds |a-b| / max(1, |a|, |b|) for numeric
// fields counted as equal. Scenario mismatch throws config_error.
struct ReportDiff {
  std::string text;  // JSON rendering of the differences
  bool empty = false;
};

ReportDiff report_diff(const std::string& summary_a, const std::string& summary_b,
                       double rel_tol = 0.0);

}  // namespace krlab
