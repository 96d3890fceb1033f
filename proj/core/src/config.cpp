#include "krlab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace krlab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string dir_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw config_error("empty element in list value '" + value + "'");
    parts.push_back(item);
  }
  if (parts.empty()) throw config_error("empty list value");
  return parts;
}

double parse_real(const std::string& key, const std::string& text) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw config_error("key '" + key + "': not a number: '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  char* end = nullptr;
  long v = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0')
    throw config_error("key '" + key + "': not an integer: '" + text + "'");
  if (v < -2147483647L || v > 2147483647L)
    throw config_error("key '" + key + "': integer out of range: '" + text + "'");
  return static_cast<int>(v);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  Config c;
  c.parse(read_file(path), dir_of(path), 0);
  return c;
}

Config Config::from_string(const std::string& text, const std::string& dir) {
  Config c;
  c.parse(text, dir, 0);
  return c;
}

void Config::parse(const std::string& text, const std::string& dir, int depth) {
  if (depth > 8) throw config_error("include depth exceeds 8 (cycle?)");
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("include ", 0) == 0) {
      std::string inc = trim(line.substr(8));
      if (inc.empty()) throw config_error("include without a path");
      std::string full = inc.front() == '/' ? inc : dir + "/" + inc;
      parse(read_file(full), dir_of(full), depth + 1);
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("line " + std::to_string(lineno) + ": empty key");
    if (value.empty())
      throw config_error("key '" + key + "': empty value");
    set(key, value);
  }
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw config_error("missing required key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_real(const std::string& key) const {
  return parse_real(key, get_string(key));
}

double Config::get_real(const std::string& key, double fallback) const {
  return has(key) ? get_real(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  return parse_int(key, get_string(key));
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_flag(const std::string& key) const {
  std::string v = get_string(key);
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw config_error("key '" + key + "': not a flag: '" + v + "'");
}

bool Config::get_flag(const std::string& key, bool fallback) const {
  return has(key) ? get_flag(key) : fallback;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get_string(key)))
    out.push_back(parse_int(key, item));
  return out;
}

std::vector<double> Config::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get_string(key)))
    out.push_back(parse_real(key, item));
  return out;
}

namespace {

using Schema = std::vector<ParamSpec>;

// Shorthand builders keep the tables readable.
ParamSpec pi(const char* n, const char* d, double lo, double hi) {
  return {n, ParamKind::integer, false, d, lo, hi};
}
ParamSpec pr(const char* n, const char* d, double lo, double hi) {
  return {n, ParamKind::real, false, d, lo, hi};
}
ParamSpec pt(const char* n, const char* d) {
  return {n, ParamKind::text, false, d, 0, 0};
}
ParamSpec pil(const char* n, const char* d, double lo, double hi) {
  return {n, ParamKind::int_list, false, d, lo, hi};
}
ParamSpec prl(const char* n, const char* d, double lo, double hi) {
  return {n, ParamKind::real_list, false, d, lo, hi};
}

const std::map<std::string, Schema>& schema_table() {
  static const std::map<std::string, Schema> table = {
      {"flow",
       {
           pi("nx", "64", 16, 1024),
           pr("tau_im", "1.0", 0.05, 20),
           pi("degree", "1", 1, 8),
           pr("dt", "1e-2", 1e-6, 1.0),
           pr("t_end", "30", 0.01, 1000),
           pr("mu_amp", "0.3", 0.0, 0.95),
           pr("newton_tol", "1e-12", 1e-15, 1e-6),
           pr("agree_tol", "1e-6", 1e-14, 1e-2),
           pr("monotone_slack", "1e-12", 1e-16, 1e-6),
           pr("monotone_t", "0.5", 0.01, 10),
           pr("monotone_dt", "1e-2", 1e-5, 0.5),
           pi("gradient_dirs", "20", 1, 1000),
           pr("gradient_tol", "1e-6", 1e-14, 1e-2),
           pr("identity_tol", "1e-10", 1e-15, 1e-4),
           pi("seed", "1234", 0, 2147483647),
       }},
      {"bergman",
       {
           pil("k_list", "2,4,8", 1, 256),
           pi("degree", "1", 1, 8),
           pr("tau_im", "1.0", 0.05, 20),
           pr("tol", "1e-10", 1e-14, 1e-2),
           pr("contraction_slack", "1e-6", 0, 1e-2),
           pr("banach_factor", "2.0", 1, 10),
           pr("start_amp", "0.3", 1e-3, 1.0),
           pi("monotone_steps", "30", 2, 10000),
           pi("expansive_steps", "18", 4, 20),
           pi("monotone_k", "4", 1, 64),
           pr("monotone_slack", "1e-12", 1e-16, 1e-6),
       }},
      {"balanced",
       {
           pi("k_anticanonical", "5", 1, 64),
           pi("k_twisted", "4", 2, 64),
           pr("tau_im", "1.0", 0.05, 20),
           pr("tol", "1e-12", 1e-15, 1e-6),
           pr("agree_tol", "1e-8", 1e-14, 1e-2),
           pr("residual_tol", "2e-10", 1e-14, 1e-2),
           pr("perturb_amp", "0.2", 0.0, 1.0),
       }},
      {"double-scaling",
       {
           pt("family", "cy_elliptic"),
           pil("k_list", "8,16,32", 2, 256),
           pr("t_star", "1.0", 0.05, 5),
           pr("dt_ref", "1e-3", 1e-6, 1e-1),
           pr("u0_amp", "0.2", 0.0, 0.6),
           pr("tau_im", "1.0", 0.05, 20),
           pr("ratio_lo", "0.4", 0.0, 1.0),
           pr("ratio_hi", "0.6", 0.0, 1.0),
           pr("decrease_factor", "3.0", 1.0, 100),
           pr("envelope_slack", "1.5", 1.0, 10),
       }},
      {"bouche-tian",
       {
           pil("k_list", "8,16,32,64", 2, 128),
           pi("degree", "4", 1, 4),
           pr("tau_im", "1.0", 0.05, 20),
           pr("amp_x", "0.15", 0.0, 0.2),
           pr("amp_y", "0.10", 0.0, 0.2),
           pr("slope_lo", "-1.15", -3, 0),
           pr("slope_hi", "-0.85", -3, 0),
           pr("r2_min", "0.98", 0.0, 1.0),
       }},
      {"family-flow",
       {
           pi("ns", "9", 5, 33),
           pr("hs", "0.05", 1e-4, 0.5),
           pi("nx", "32", 16, 256),
           pr("t0", "0.3", 0.05, 2),
           prl("dt_list", "0.2,0.1,0.05,0.025", 1e-4, 1.0),
           pil("n_list", "24,32,48", 16, 256),
           pr("flow_t", "0.1", 0.01, 1.0),
           pr("dt_sub_cy", "1e-3", 1e-6, 1e-2),
           pr("dt_sub_tw", "5e-4", 1e-6, 1e-2),
           pr("path_a", "0.05", 0.0, 0.2),
           pr("path_b", "0.05", 0.0, 0.2),
           pr("path_e", "0.04", 0.0, 0.2),
           pr("quad_a", "0.10", 0.0, 0.5),
           pr("dt_order_min", "1.0", 0.1, 3),
           pr("h_order_min", "1.8", 0.1, 4),
           pr("ablation_ratio_min", "20", 1, 1e6),
           pr("ident_tol", "1e-3", 1e-12, 1),
           pr("minc_tol", "1e-8", 1e-16, 1e-2),
           pi("wp_ns", "5", 5, 9),
           pr("wp_hs", "0.01", 1e-4, 0.1),
           pi("wp_nx", "64", 16, 256),
           pr("wp_tol", "1e-6", 1e-12, 1e-2),
       }},
      {"family-bergman",
       {
           pi("k", "4", 1, 16),
           pi("steps", "8", 1, 64),
           pi("ns", "9", 5, 33),
           pr("hs", "0.05", 1e-4, 0.5),
           pi("nx", "64", 16, 256),
           pr("bound_tol", "1e-6", 1e-14, 1e-2),
       }},
      {"psh-check",
       {
           pi("k", "2", 1, 16),
           pi("ns", "9", 5, 33),
           pr("hs", "0.05", 1e-4, 0.5),
           pi("nx", "64", 16, 256),
           pr("tol", "1e-8", 1e-16, 1e-2),
           pr("triv_a", "0.10", 0.0, 0.5),
           pr("triv_b", "0.12", 0.0, 0.5),
           pr("control_b", "-0.07", -1.0, 0.0),
           pt("points", "0.3,0.3;0.7,0.2"),
       }},
  };
  return table;
}

void check_range(const ParamSpec& spec, double v) {
  if (v < spec.min || v > spec.max) {
    std::ostringstream msg;
    msg << "key '" << spec.name << "': value " << v << " outside [" << spec.min
        << ", " << spec.max << "]";
    throw config_error(msg.str());
  }
}

void validate_param(const Config& cfg, const ParamSpec& spec) {
  if (!cfg.has(spec.name)) {
    if (spec.required) throw config_error("missing required key '" + spec.name + "'");
    return;
  }
  switch (spec.kind) {
    case ParamKind::integer:
      check_range(spec, cfg.get_int(spec.name));
      break;
    case ParamKind::real:
      check_range(spec, cfg.get_real(spec.name));
      break;
    case ParamKind::flag:
      cfg.get_flag(spec.name);
      break;
    case ParamKind::text:
      break;
    case ParamKind::int_list:
      for (int v : cfg.get_int_list(spec.name)) check_range(spec, v);
      break;
    case ParamKind::real_list:
      for (double v : cfg.get_real_list(spec.name)) check_range(spec, v);
      break;
  }
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "flow",          "bergman",       "balanced",       "double-scaling",
      "bouche-tian",   "family-flow",   "family-bergman", "psh-check"};
  return names;
}

const std::vector<ParamSpec>& scenario_schema(const std::string& scenario) {
  const auto& table = schema_table();
  auto it = table.find(scenario);
  if (it == table.end()) throw config_error("unknown scenario '" + scenario + "'");
  return it->second;
}

ExperimentConfig load_experiment(const std::string& path,
                                 const std::string& output_root) {
  Config cfg = Config::from_file(path);
  ExperimentConfig exp;
  exp.scenario = cfg.get_string("scenario");
  const auto& schema = scenario_schema(exp.scenario);

  for (const auto& key : cfg.keys()) {
    if (key == "scenario" || key == "output_dir") continue;
    bool known = false;
    for (const auto& spec : schema)
      if (spec.name == key) {
        known = true;
        break;
      }
    if (!known)
      throw config_error("key '" + key + "' not in the '" + exp.scenario +
                         "' schema");
  }
  for (const auto& spec : schema) validate_param(cfg, spec);
  // Write defaults back so the report echo is self-contained.
  for (const auto& spec : schema)
    if (!cfg.has(spec.name)) cfg.set(spec.name, spec.fallback);

  std::string root = output_root;
  if (root.empty()) {
    const char* env = std::getenv("KRLAB_OUTPUT_ROOT");
    root = env && *env ? env : ".";
  }
  std::string leaf = cfg.get_string("output_dir", exp.scenario);
  exp.output_dir = leaf.front() == '/' ? leaf : root + "/" + leaf;
  exp.params = std::move(cfg);
  return exp;
}

}  // namespace krlab
