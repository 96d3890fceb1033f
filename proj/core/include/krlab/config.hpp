#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace krlab {

// Raised for malformed or out-of-range configuration; the CLI maps it to
// exit code 2, before any computation has started.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Flat key = value store with '#' comments and an 'include <path>' directive
// (paths relative to the including file, depth-limited). Later assignments
// override earlier ones; key order of first appearance is preserved so the
// config echo in reports is stable.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text, const std::string& dir = ".");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_flag(const std::string& key) const;
  bool get_flag(const std::string& key, bool fallback) const;
  // Comma-separated lists.
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  const std::vector<std::string>& keys() const { return order_; }

 private:
  void parse(const std::string& text, const std::string& dir, int depth);
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

enum class ParamKind { integer, real, flag, text, int_list, real_list };

// One schema row: type, requiredness, default written back into the echo,
// and the closed numeric range (applied elementwise to lists).
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::real;
  bool required = false;
  std::string fallback;
  double min = -1e300;
  double max = 1e300;
};

// Validated experiment description: the scenario name, its parameter map
// with every default filled in (reports echo a self-contained config), and
// the output directory resolved against the output root.
struct ExperimentConfig {
  std::string scenario;
  Config params;
  std::string output_dir;
};

const std::vector<std::string>& scenario_names();
const std::vector<ParamSpec>& scenario_schema(const std::string& scenario);

// Parse + schema-check: unknown keys, missing required keys, type errors,
// and range violations all throw config_error before any computation.
// output_root defaults to the KRLAB_OUTPUT_ROOT environment variable, then
// to the current directory.
ExperimentConfig load_experiment(const std::string& path,
                                 const std::string& output_root = "");

}  // namespace krlab
