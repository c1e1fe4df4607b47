#include "poincare/config.hpp"

#include <toml.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace poincare {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  return static_cast<int>(to_long(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  try {
    return parse_values(text);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(to_int(key, item));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string node_text(const toml::node& node, const std::string& key) {
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return std::to_string(v->get());
  if (auto v = node.as_floating_point()) return format_double(v->get());
  if (auto v = node.as_boolean()) return v->get() ? "true" : "false";
  if (auto arr = node.as_array()) {
    std::string out;
    for (const auto& item : *arr) {
      if (item.is_array() || item.is_table()) {
        throw ConfigError(key + ": nested arrays are not supported");
      }
      if (!out.empty()) out += ",";
      out += node_text(item, key);
    }
    return out;
  }
  throw ConfigError(key + ": unsupported value type");
}

void walk_table(RunConfig& cfg, const toml::table& table, const std::string& prefix,
                const std::string& source) {
  for (const auto& [k, node] : table) {
    const std::string key = prefix.empty() ? std::string(k.str())
                                           : prefix + "." + std::string(k.str());
    if (auto sub = node.as_table()) {
      walk_table(cfg, *sub, key, source);
      continue;
    }
    try {
      set_option(cfg, key, node_text(node, key));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(node.source().begin.line) +
                        ": " + e.what());
    }
  }
}

}  // namespace

std::vector<double> parse_values(const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.empty()) return out;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("range must look like start:stop:count");
    const double a = to_double("range", parts[0]);
    const double b = to_double("range", parts[1]);
    const long n = to_long("range", parts[2]);
    if (n < 1) throw ConfigError("range count must be >= 1");
    for (long i = 0; i < n; ++i) {
      out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(to_double("list", item));
  }
  return out;
}

std::vector<std::string> config_keys() {
  return {"seed", "jobs", "out",
          "system.name", "system.params.<name>", "system.x0",
          "integrator.dt", "integrator.n_steps", "integrator.stride",
          "preprocess.eps_p", "preprocess.eps_n", "preprocess.reduce",
          "pullnet.hidden", "pullnet.lr", "pullnet.steps", "pullnet.batch",
          "pullnet.activation", "pullnet.eval_points", "pullnet.small_L_ref",
          "pullnet.small_L_max_steps",
          "sampler.chain_length", "sampler.start_index", "sampler.mode",
          "erd.L_grid", "erd.count_mode", "stability.points",
          "scan.axis", "scan.values", "scan.orbits", "scan.custom_param",
          "scan.window_length", "scan.fixed_L", "scan.seeds", "scan.desk_scale",
          "scan.max_points",
          "baseline.method", "baseline.bottlenecks", "baseline.threshold",
          "baseline.restarts", "baseline.fractal_window",
          "baseline.fractal_max_points", "baseline.fractal_grid_points",
          "export.target_a", "export.target_b", "export.stride"};
}

void set_option(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "seed") c.seed = static_cast<std::uint64_t>(to_long(key, v));
  else if (key == "jobs") c.jobs = to_int(key, v);
  else if (key == "out") c.out = trim(v);
  else if (key == "system.name") c.system = trim(v);
  else if (key.rfind("system.params.", 0) == 0) c.params[key.substr(14)] = to_double(key, v);
  else if (key == "system.x0") c.x0 = to_doubles(key, v);
  else if (key == "integrator.dt") c.dt = to_double(key, v);
  else if (key == "integrator.n_steps") c.n_steps = to_long(key, v);
  else if (key == "integrator.stride") c.stride = to_long(key, v);
  else if (key == "preprocess.eps_p") c.eps_p = to_double(key, v);
  else if (key == "preprocess.eps_n") c.eps_n = to_double(key, v);
  else if (key == "preprocess.reduce") c.reduce = to_bool(key, v);
  else if (key == "pullnet.hidden") c.train.hidden = to_ints(key, v);
  else if (key == "pullnet.lr") c.train.lr = to_double(key, v);
  else if (key == "pullnet.steps") c.train.steps = to_int(key, v);
  else if (key == "pullnet.batch") c.train.batch = to_int(key, v);
  else if (key == "pullnet.activation") {
    try {
      c.train.activation = activation_from_name(trim(v));
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  else if (key == "pullnet.eval_points") c.train.eval_points = to_int(key, v);
  else if (key == "pullnet.small_L_ref") c.train.small_L_ref = to_double(key, v);
  else if (key == "pullnet.small_L_max_steps") c.train.small_L_max_steps = to_int(key, v);
  else if (key == "sampler.chain_length") c.sampler.chain_length = to_int(key, v);
  else if (key == "sampler.start_index") c.sampler.start_index = to_long(key, v);
  else if (key == "sampler.mode") {
    try {
      c.sampler.mode = walk_mode_from_string(trim(v));
    } catch (const Error& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  else if (key == "erd.L_grid") c.L_grid = to_doubles(key, v);
  else if (key == "erd.count_mode") c.count_mode = trim(v);
  else if (key == "stability.points") c.stability_points = to_int(key, v);
  else if (key == "scan.axis") c.scan.axis = trim(v);
  else if (key == "scan.values") c.scan.values = to_doubles(key, v);
  else if (key == "scan.orbits") c.scan.orbits = to_doubles(key, v);
  else if (key == "scan.custom_param") c.scan.custom_param = trim(v);
  else if (key == "scan.window_length") c.scan.window_length = to_double(key, v);
  else if (key == "scan.fixed_L") c.scan.fixed_L = to_double(key, v);
  else if (key == "scan.seeds") c.scan.seeds = to_int(key, v);
  else if (key == "scan.desk_scale") c.scan.desk_scale = to_double(key, v);
  else if (key == "scan.max_points") c.scan.max_points = to_long(key, v);
  else if (key == "baseline.method") c.baseline.method = trim(v);
  else if (key == "baseline.bottlenecks") c.baseline.bottlenecks = to_ints(key, v);
  else if (key == "baseline.threshold") c.baseline.threshold = to_double(key, v);
  else if (key == "baseline.restarts") c.baseline.restarts = to_int(key, v);
  else if (key == "baseline.fractal_window") {
    const auto w = to_doubles(key, v);
    if (w.size() != 2) throw ConfigError(key + ": expected two values");
    c.baseline.fractal_window = std::make_pair(w[0], w[1]);
  }
  else if (key == "baseline.fractal_max_points") c.baseline.fractal_max_points = to_int(key, v);
  else if (key == "baseline.fractal_grid_points") c.baseline.fractal_grid_points = to_int(key, v);
  else if (key == "export.target_a") c.export_settings.target_a = to_double(key, v);
  else if (key == "export.target_b") c.export_settings.target_b = to_double(key, v);
  else if (key == "export.stride") c.export_settings.stride = to_long(key, v);
  else throw ConfigError("unknown key '" + key + "'");
}

void apply_env_overrides(RunConfig& cfg, const std::string& prefix,
                         const std::function<const char*(const char*)>& getenv_fn) {
  for (const std::string& key : config_keys()) {
    if (key.find('<') != std::string::npos) continue;
    std::string name = prefix;
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char ch = key[i];
      if (ch == '.') {
        name += "__";
      } else {
        name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
    }
    if (const char* value = getenv_fn(name.c_str())) {
      try {
        set_option(cfg, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError("environment " + name + ": " + e.what());
      }
    }
  }
}

RunConfig parse_config(std::string_view toml_text, const std::string& source) {
  toml::table table;
  try {
    table = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  RunConfig cfg;
  walk_table(cfg, table, "", source);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void RunConfig::validate() const {
  const SystemSpec sys = system_spec();
  if (!x0.empty() && static_cast<int>(x0.size()) != sys.dimension()) {
    throw ConfigError("system.x0: expected " + std::to_string(sys.dimension()) +
                      " values for " + system);
  }
  if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("integrator.dt must be > 0");
  if (n_steps < 0) throw ConfigError("integrator.n_steps must be >= 1");
  if (stride < 1) throw ConfigError("integrator.stride must be >= 1");
  if (!(eps_p > 0.0 && eps_p < 1.0)) throw ConfigError("preprocess.eps_p must lie in (0, 1)");
  if (!(eps_n >= 0.0)) throw ConfigError("preprocess.eps_n must be >= 0");
  train.validate();
  sampler.validate();
  if (L_grid.empty()) throw ConfigError("erd.L_grid must not be empty");
  if (!std::is_sorted(L_grid.begin(), L_grid.end()) || L_grid.front() < 0.0) {
    throw ConfigError("erd.L_grid must be ascending and non-negative");
  }
  if (count_mode != "n_eff" && count_mode != "threshold") {
    throw ConfigError("erd.count_mode must be n_eff or threshold");
  }
  if (stability_points < 1) throw ConfigError("stability.points must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (out.empty()) throw ConfigError("out must not be empty");
  scan_axis_from_string(scan.axis);
  if (baseline.method != "pca" && baseline.method != "autoencoder" &&
      baseline.method != "fractal") {
    throw ConfigError("baseline.method must be pca, autoencoder or fractal");
  }
  if (!(baseline.threshold > 0.0)) throw ConfigError("baseline.threshold must be > 0");
  if (baseline.restarts < 1) throw ConfigError("baseline.restarts must be >= 1");
  if (export_settings.stride < 1) throw ConfigError("export.stride must be >= 1");
}

SystemSpec RunConfig::system_spec() const {
  SystemSpec sys = SystemSpec::make(system_kind_from_string(system));
  sys.params = params;
  sys.validate();
  return sys;
}

Vector RunConfig::initial_state() const {
  if (x0.empty()) return system_spec().default_initial_state();
  return Eigen::Map<const Vector>(x0.data(), static_cast<long>(x0.size()));
}

double RunConfig::time_step() const {
  return dt > 0.0 ? dt : system_spec().default_dt();
}

long RunConfig::steps() const {
  return n_steps > 0 ? n_steps : system_spec().default_steps();
}

AnalyzeConfig RunConfig::analyze_config() const {
  AnalyzeConfig a;
  a.eps_p = eps_p;
  a.eps_n = eps_n;
  a.reduce = reduce;
  a.count_mode = count_mode == "threshold" ? CountMode::threshold : CountMode::n_eff;
  a.erd.train = train;
  a.erd.train.seed = derive_seed(seed, 1);
  a.erd.sampler = sampler;
  a.erd.sampler.seed = derive_seed(seed, 2);
  a.erd.L_grid = L_grid;
  a.erd.jobs = jobs;
  return a;
}

ScanSpec RunConfig::scan_spec() const {
  ScanSpec s;
  s.system = system_spec();
  s.axis = scan_axis_from_string(scan.axis);
  s.values = scan.values;
  s.orbits = scan.orbits;
  s.custom_param = scan.custom_param;
  s.window_length = scan.window_length;
  if (!x0.empty()) s.x0 = initial_state();
  s.fixed_L = scan.fixed_L;
  s.seeds = scan.seeds;
  s.desk_scale = scan.desk_scale;
  s.max_points = scan.max_points;
  s.eps_p = eps_p;
  s.train = train;
  s.sampler = sampler;
  s.seed = derive_seed(seed, 3);
  s.jobs = jobs;
  return s;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["out"] = out;
  j["system"] = {{"name", system}, {"params", params}, {"x0", x0}};
  j["integrator"] = {{"dt", time_step()}, {"n_steps", steps()}, {"stride", stride}};
  j["preprocess"] = {{"eps_p", eps_p}, {"eps_n", eps_n}, {"reduce", reduce}};
  j["pullnet"] = {{"hidden", train.hidden}, {"lr", train.lr}, {"steps", train.steps},
                  {"batch", train.batch}, {"activation", activation_name(train.activation)},
                  {"eval_points", train.eval_points}, {"small_L_ref", train.small_L_ref},
                  {"small_L_max_steps", train.small_L_max_steps}};
  j["sampler"] = {{"chain_length", sampler.chain_length},
                  {"start_index", sampler.start_index},
                  {"mode", to_string(sampler.mode)}};
  j["erd"] = {{"L_grid", L_grid}, {"count_mode", count_mode}};
  j["stability"] = {{"points", stability_points}};
  j["scan"] = {{"axis", scan.axis}, {"values", scan.values}, {"orbits", scan.orbits},
               {"custom_param", scan.custom_param}, {"window_length", scan.window_length},
               {"fixed_L", scan.fixed_L}, {"seeds", scan.seeds},
               {"desk_scale", scan.desk_scale}, {"max_points", scan.max_points}};
  nlohmann::json window;
  if (baseline.fractal_window) {
    window = {baseline.fractal_window->first, baseline.fractal_window->second};
  }
  j["baseline"] = {{"method", baseline.method}, {"bottlenecks", baseline.bottlenecks},
                   {"threshold", baseline.threshold}, {"restarts", baseline.restarts},
                   {"fractal_window", window},
                   {"fractal_max_points", baseline.fractal_max_points},
                   {"fractal_grid_points", baseline.fractal_grid_points}};
  j["export"] = {{"target_a", export_settings.target_a},
                 {"target_b", export_settings.target_b},
                 {"stride", export_settings.stride}};
  return j;
}

}  // namespace poincare
