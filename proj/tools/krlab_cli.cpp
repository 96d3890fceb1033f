// Command-line front end: run scenario configs, fit rates to report tables,
// diff two written reports, and inspect scenario schemas.
//
// Exit codes: 0 success (run passed / diff empty), 1 assertion failure or
// nonempty diff, 2 configuration error, 3 numerical error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "krlab/config.hpp"
#include "krlab/errors.hpp"
#include "krlab/fit.hpp"
#include "krlab/report.hpp"
#include "krlab/scenarios.hpp"

#ifndef KRLAB_VERSION
#define KRLAB_VERSION "0.0.0"
#endif

namespace {

const char* status_word(krlab::AssertionStatus s) {
  switch (s) {
    case krlab::AssertionStatus::pass: return "PASS";
    case krlab::AssertionStatus::fail: return "FAIL";
    default: return "SKIP";
  }
}

void print_report(const krlab::ExperimentReport& rep, const std::string& path) {
  for (const auto& [name, value] : rep.metrics)
    std::printf("metric %-36s % .9e\n", name.c_str(), value);
  for (const auto& a : rep.assertions) {
    std::printf("%s %-36s value=% .6e %s %s\n", status_word(a.status),
                a.name.c_str(), a.value, a.relation.c_str(),
                a.detail.empty() ? "" : a.detail.c_str());
  }
  std::printf("wall_time_seconds %.3f\n", rep.wall_time_seconds);
  std::printf("summary %s\n", path.c_str());
  std::printf("overall: %s\n", rep.passed() ? "PASS" : "FAIL");
}

int cmd_run(const std::string& config_path, const std::string& out_root) {
  auto cfg = krlab::load_experiment(config_path, out_root);
  auto t0 = std::chrono::steady_clock::now();
  auto rep = krlab::run_scenario(cfg);
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::string path = krlab::write_report(rep);
  print_report(rep, path);
  return rep.passed() ? 0 : 1;
}

// Minimal reader for the tables this artifact writes: comma separation,
// no quoting, first line is the header.
struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw krlab::config_error("cannot open csv '" + path + "'");
  Csv csv;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header) {
      csv.columns = cells;
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str())
        throw krlab::config_error("non-numeric cell '" + c + "' in " + path);
      row.push_back(v);
    }
    if (row.size() != csv.columns.size())
      throw krlab::config_error("ragged row in " + path);
    csv.rows.push_back(std::move(row));
  }
  if (csv.columns.empty()) throw krlab::config_error("empty csv " + path);
  return csv;
}

size_t column_index(const Csv& csv, const std::string& name,
                    const std::string& path) {
  for (size_t i = 0; i < csv.columns.size(); ++i)
    if (csv.columns[i] == name) return i;
  throw krlab::config_error("no column '" + name + "' in " + path);
}

int cmd_fit(const std::string& csv_path, const std::string& xcol,
            const std::string& ycol, const std::string& model) {
  Csv csv = read_csv(csv_path);
  size_t xi = column_index(csv, xcol, csv_path);
  size_t yi = column_index(csv, ycol, csv_path);
  std::vector<double> x, y;
  for (const auto& row : csv.rows) {
    x.push_back(row[xi]);
    y.push_back(row[yi]);
  }
  krlab::FitModel m;
  if (model == "power") {
    m = krlab::FitModel::power;
  } else if (model == "exponential" || model == "exp") {
    m = krlab::FitModel::exponential;
  } else {
    throw krlab::config_error("unknown fit model '" + model + "'");
  }
  auto fit = krlab::fit_rate(x, y, m);
  std::printf("model %s\n", model == "exp" ? "exponential" : model.c_str());
  std::printf("slope % .12e\n", fit.slope);
  std::printf("intercept % .12e\n", fit.intercept);
  std::printf("r2 % .12e\n", fit.r2);
  std::printf("points %d\n", fit.points);
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b, double rel_tol) {
  auto d = krlab::report_diff(a, b, rel_tol);
  if (d.empty) {
    std::printf("identical\n");
    return 0;
  }
  std::printf("%s\n", d.text.c_str());
  return 1;
}

const char* kind_word(krlab::ParamKind k) {
  switch (k) {
    case krlab::ParamKind::integer: return "int";
    case krlab::ParamKind::real: return "real";
    case krlab::ParamKind::flag: return "flag";
    case krlab::ParamKind::text: return "text";
    case krlab::ParamKind::int_list: return "int-list";
    default: return "real-list";
  }
}

int cmd_schema(const std::string& scenario) {
  if (scenario.empty()) {
    for (const auto& name : krlab::scenario_names())
      std::printf("%s\n", name.c_str());
    return 0;
  }
  for (const auto& spec : krlab::scenario_schema(scenario)) {
    std::printf("%-20s %-9s", spec.name.c_str(), kind_word(spec.kind));
    if (spec.required)
      std::printf(" required");
    else
      std::printf(" default=%s", spec.fallback.c_str());
    if (spec.min > -1e300 || spec.max < 1e300)
      std::printf("  range=[%g, %g]", spec.min, spec.max);
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for relative Kahler-Ricci flows and "
               "Bergman quantization on model geometries"};
  app.set_version_flag("--version", KRLAB_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_root;
  auto* run = app.add_subcommand("run", "Run a scenario config and write its report");
  run->add_option("config", config_path, "Path to a key = value config file")
      ->required();
  run->add_option("--out", out_root,
                  "Output root (default: KRLAB_OUTPUT_ROOT, then cwd)");

  std::string csv_path, xcol = "k", ycol, model = "power";
  auto* fit = app.add_subcommand("fit", "Fit a rate model to a report table");
  fit->add_option("csv", csv_path, "CSV written by a scenario run")->required();
  fit->add_option("--x", xcol, "Abscissa column (default k)");
  fit->add_option("--y", ycol, "Ordinate column")->required();
  fit->add_option("--model", model, "power | exponential (default power)");

  std::string diff_a, diff_b;
  double rel_tol = 0.0;
  auto* diff = app.add_subcommand("diff", "Compare two written summaries");
  diff->add_option("a", diff_a, "First summary.json")->required();
  diff->add_option("b", diff_b, "Second summary.json")->required();
  diff->add_option("--rel-tol", rel_tol, "Relative tolerance for numeric fields");

  std::string schema_name;
  auto* schema = app.add_subcommand("schema", "List scenarios or one schema");
  schema->add_option("scenario", schema_name, "Scenario name (optional)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_root);
    if (fit->parsed()) return cmd_fit(csv_path, xcol, ycol, model);
    if (diff->parsed()) return cmd_diff(diff_a, diff_b, rel_tol);
    return cmd_schema(schema_name);
  } catch (const krlab::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const krlab::numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
