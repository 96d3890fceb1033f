#include "krlab/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef KRLAB_VERSION
#define KRLAB_VERSION "1.0.0"
#endif

namespace krlab {

namespace {

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal: the same bits always render the same bytes.
std::string render(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string status_name(AssertionStatus s) {
  switch (s) {
    case AssertionStatus::pass:
      return "pass";
    case AssertionStatus::fail:
      return "fail";
    case AssertionStatus::skipped:
      return "skipped";
  }
  return "fail";
}

Assertion make(const std::string& name, bool ok, double value, double threshold,
               const char* relation, std::string detail = "") {
  Assertion a;
  a.name = name;
  a.status = ok ? AssertionStatus::pass : AssertionStatus::fail;
  a.value = value;
  a.threshold = threshold;
  a.relation = relation;
  a.detail = std::move(detail);
  return a;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open report file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvData parse_csv(const std::string& text) {
  CsvData csv;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      csv.columns = cells;
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

bool close(double a, double b, double rel_tol) {
  if (a == b) return true;  // covers shared infinities and exact matches
  if (std::isnan(a) && std::isnan(b)) return true;
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= rel_tol * scale;
}

}  // namespace

void CsvTable::add_row(std::vector<double> row) {
  if (!rows.empty() && row.size() != columns.size())
    throw std::invalid_argument("csv row width mismatch in table '" + name + "'");
  rows.push_back(std::move(row));
}

std::string csv_to_string(const CsvTable& table) {
  std::string out;
  for (size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += table.columns[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += render(row[j]);
    }
    out += '\n';
  }
  return out;
}

Assertion check_le(const std::string& name, double value, double threshold) {
  return make(name, value <= threshold, value, threshold, "<=");
}
Assertion check_ge(const std::string& name, double value, double threshold) {
  return make(name, value >= threshold, value, threshold, ">=");
}
Assertion check_lt(const std::string& name, double value, double threshold) {
  return make(name, value < threshold, value, threshold, "<");
}
Assertion check_gt(const std::string& name, double value, double threshold) {
  return make(name, value > threshold, value, threshold, ">");
}
Assertion check_in(const std::string& name, double value, double lo, double hi) {
  return make(name, value >= lo && value <= hi, value, hi, "in",
              "[" + render(lo) + ", " + render(hi) + "]");
}

void ExperimentReport::metric(const std::string& name, double value) {
  metrics.emplace_back(name, value);
}

bool ExperimentReport::passed() const {
  for (const auto& a : assertions)
    if (a.status == AssertionStatus::fail) return false;
  return true;
}

std::string summary_to_json(const ExperimentReport& report) {
  Json j;
  j["artifact_version"] = KRLAB_VERSION;
  j["scenario"] = report.scenario;
  Json cfg = Json::object();
  cfg["scenario"] = report.scenario;
  for (const auto& key : report.config.params.keys())
    if (key != "scenario") cfg[key] = report.config.params.get_string(key);
  j["config"] = cfg;
  Json metrics = Json::object();
  for (const auto& [name, value] : report.metrics) metrics[name] = value;
  j["metrics"] = metrics;
  Json asserts = Json::array();
  for (const auto& a : report.assertions) {
    Json e;
    e["name"] = a.name;
    e["status"] = status_name(a.status);
    e["value"] = a.value;
    e["threshold"] = a.threshold;
    e["relation"] = a.relation;
    if (!a.detail.empty()) e["detail"] = a.detail;
    asserts.push_back(e);
  }
  j["assertions"] = asserts;
  Json csvs = Json::array();
  for (const auto& t : report.tables) csvs.push_back(t.name + ".csv");
  j["csv"] = csvs;
  j["wall_time_seconds"] = report.wall_time_seconds;
  return j.dump(2) + "\n";
}

std::string write_report(const ExperimentReport& report) {
  namespace fs = std::filesystem;
  const std::string& dir = report.config.output_dir;
  fs::create_directories(dir);
  for (const auto& t : report.tables) {
    std::ofstream out(dir + "/" + t.name + ".csv", std::ios::binary);
    out << csv_to_string(t);
    if (!out) throw std::runtime_error("failed writing csv in " + dir);
  }
  std::string path = dir + "/summary.json";
  std::ofstream out(path, std::ios::binary);
  out << summary_to_json(report);
  if (!out) throw std::runtime_error("failed writing " + path);
  return path;
}

ReportDiff report_diff(const std::string& summary_a, const std::string& summary_b,
                       double rel_tol) {
  Json a = Json::parse(read_file(summary_a));
  Json b = Json::parse(read_file(summary_b));
  if (a.value("scenario", "") != b.value("scenario", ""))
    throw config_error("report_diff: scenario mismatch ('" +
                       a.value("scenario", "") + "' vs '" +
                       b.value("scenario", "") + "')");

  Json diff;
  Json config_changes = Json::array();
  Json metric_diffs = Json::array();
  Json assertion_changes = Json::array();
  Json csv_diffs = Json::array();
  Json structural = Json::array();

  // Config echo: string compare, both directions.
  const Json& ca = a["config"];
  const Json& cb = b["config"];
  for (auto it = ca.begin(); it != ca.end(); ++it) {
    if (!cb.contains(it.key()))
      structural.push_back({{"only_in_a", "config." + it.key()}});
    else if (cb[it.key()] != it.value())
      config_changes.push_back(
          {{"key", it.key()}, {"a", it.value()}, {"b", cb[it.key()]}});
  }
  for (auto it = cb.begin(); it != cb.end(); ++it)
    if (!ca.contains(it.key()))
      structural.push_back({{"only_in_b", "config." + it.key()}});

  const Json& ma = a["metrics"];
  const Json& mb = b["metrics"];
  for (auto it = ma.begin(); it != ma.end(); ++it) {
    if (!mb.contains(it.key())) {
      structural.push_back({{"only_in_a", "metrics." + it.key()}});
      continue;
    }
    double va = it.value().get<double>(), vb = mb[it.key()].get<double>();
    if (!close(va, vb, rel_tol))
      metric_diffs.push_back({{"name", it.key()},
                              {"a", va},
                              {"b", vb},
                              {"abs_diff", std::fabs(va - vb)}});
  }
  for (auto it = mb.begin(); it != mb.end(); ++it)
    if (!ma.contains(it.key()))
      structural.push_back({{"only_in_b", "metrics." + it.key()}});

  // Assertions matched by name; both status flips and value drifts count.
  auto find_assert = [](const Json& list, const std::string& name) -> const Json* {
    for (const auto& e : list)
      if (e.value("name", "") == name) return &e;
    return nullptr;
  };
  for (const auto& ea : a["assertions"]) {
    const Json* eb = find_assert(b["assertions"], ea.value("name", ""));
    if (!eb) {
      structural.push_back({{"only_in_a", "assertion " + ea.value("name", "")}});
      continue;
    }
    bool status_change = ea.value("status", "") != eb->value("status", "");
    bool value_change =
        !close(ea.value("value", 0.0), eb->value("value", 0.0), rel_tol);
    if (status_change || value_change)
      assertion_changes.push_back({{"name", ea.value("name", "")},
                                   {"a_status", ea.value("status", "")},
                                   {"b_status", eb->value("status", "")},
                                   {"a_value", ea.value("value", 0.0)},
                                   {"b_value", eb->value("value", 0.0)}});
  }
  for (const auto& eb : b["assertions"])
    if (!find_assert(a["assertions"], eb.value("name", "")))
      structural.push_back({{"only_in_b", "assertion " + eb.value("name", "")}});

  // CSV series: cell-wise where shapes agree, structural otherwise.
  namespace fs = std::filesystem;
  std::string dir_a = fs::path(summary_a).parent_path().string();
  std::string dir_b = fs::path(summary_b).parent_path().string();
  if (dir_a.empty()) dir_a = ".";
  if (dir_b.empty()) dir_b = ".";
  std::vector<std::string> names_a, names_b;
  for (const auto& n : a["csv"]) names_a.push_back(n.get<std::string>());
  for (const auto& n : b["csv"]) names_b.push_back(n.get<std::string>());
  for (const auto& name : names_a) {
    bool in_b = false;
    for (const auto& n : names_b) in_b = in_b || n == name;
    if (!in_b) {
      structural.push_back({{"only_in_a", "csv " + name}});
      continue;
    }
    CsvData csv_a = parse_csv(read_file(dir_a + "/" + name));
    CsvData csv_b = parse_csv(read_file(dir_b + "/" + name));
    if (csv_a.columns != csv_b.columns || csv_a.rows.size() != csv_b.rows.size()) {
      structural.push_back({{"shape_changed", "csv " + name}});
      continue;
    }
    for (size_t col = 0; col < csv_a.columns.size(); ++col) {
      double max_diff = 0.0;
      int count = 0;
      for (size_t r = 0; r < csv_a.rows.size(); ++r) {
        double va = csv_a.rows[r][col], vb = csv_b.rows[r][col];
        if (!close(va, vb, rel_tol)) {
          max_diff = std::max(max_diff, std::fabs(va - vb));
          ++count;
        }
      }
      if (count)
        csv_diffs.push_back({{"csv", name},
                             {"column", csv_a.columns[col]},
                             {"cells_changed", count},
                             {"max_abs_diff", max_diff}});
    }
  }
  for (const auto& name : names_b) {
    bool in_a = false;
    for (const auto& n : names_a) in_a = in_a || n == name;
    if (!in_a) structural.push_back({{"only_in_b", "csv " + name}});
  }

  ReportDiff result;
  result.empty = config_changes.empty() && metric_diffs.empty() &&
                 assertion_changes.empty() && csv_diffs.empty() &&
                 structural.empty();
  diff["scenario"] = a.value("scenario", "");
  diff["identical"] = result.empty;
  diff["config_changes"] = config_changes;
  diff["metric_diffs"] = metric_diffs;
  diff["assertion_changes"] = assertion_changes;
  diff["csv_diffs"] = csv_diffs;
  diff["structural"] = structural;
  result.text = diff.dump(2) + "\n";
  return result;
}

}  // namespace krlab
