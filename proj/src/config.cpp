#include "levyap/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace levyap {

ConfigError::ConfigError(const std::string& key, std::size_t line, const std::string& what)
    : Error(ErrorKind::Config,
            (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                (key.empty() ? what : "key '" + key + "': " + what)),
      key_(key),
      line_(line) {}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v, std::size_t line) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, line, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v, std::size_t line) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, line, "expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v, std::size_t line) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "on" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "off" || t == "no") return false;
  throw ConfigError(key, line, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v, std::size_t line) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item, line));
  }
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

Vec2 to_vec2(const std::string& key, const std::string& v, std::size_t line) {
  const auto l = to_list(key, v, line);
  if (l.size() != 2) throw ConfigError(key, line, "expected two comma-separated numbers");
  return {l[0], l[1]};
}

struct Entry {
  std::string key;
  std::string help;
  bool experiment;
  std::function<void(RunConfig&, const std::string&, std::size_t)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define LEVYAP_DOUBLE(name, member, text)                                                   \
  Entry {                                                                                   \
    name, text, true,                                                                       \
        [](RunConfig& c, const std::string& v, std::size_t l) { c.member = to_double(name, v, l); }, \
        [](const RunConfig& c) { return format_double(c.member); }                          \
  }
#define LEVYAP_UINT(name, member, text, experiment)                                         \
  Entry {                                                                                   \
    name, text, experiment,                                                                 \
        [](RunConfig& c, const std::string& v, std::size_t l) {                             \
          c.member = static_cast<decltype(c.member)>(to_uint(name, v, l));                  \
        },                                                                                  \
        [](const RunConfig& c) { return std::to_string(c.member); }                         \
  }
#define LEVYAP_BOOL(name, member, text, experiment)                                         \
  Entry {                                                                                   \
    name, text, experiment,                                                                 \
        [](RunConfig& c, const std::string& v, std::size_t l) { c.member = to_bool(name, v, l); }, \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }         \
  }
#define LEVYAP_STRING(name, member, text, experiment)                                       \
  Entry {                                                                                   \
    name, text, experiment,                                                                 \
        [](RunConfig& c, const std::string& v, std::size_t) { c.member = trim(v); },        \
        [](const RunConfig& c) { return c.member; }                                         \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      LEVYAP_STRING("system.name", system, "nilpotent or duffing", true),
      LEVYAP_DOUBLE("system.a", a, "nilpotent drift coefficient a > 0"),
      LEVYAP_DOUBLE("system.sigma", sigma, "perturbation strength sigma > 0"),
      LEVYAP_BOOL("noise.brownian", noise.brownian, "include the Brownian part", true),
      LEVYAP_DOUBLE("noise.alpha", noise.measure.alpha, "stability index in (0, 2)"),
      LEVYAP_DOUBLE("noise.c_alpha", noise.measure.c_alpha, "jump intensity constant, 0 disables jumps"),
      LEVYAP_DOUBLE("noise.cutoff_c", noise.measure.cutoff, "jumps are restricted to |z| < c"),
      LEVYAP_DOUBLE("noise.floor_delta", noise.measure.floor, "jumps below this size are not sampled"),
      Entry{"noise.small_jumps", "drop or gaussian: treatment of jumps below the floor", true,
            [](RunConfig& c, const std::string& v, std::size_t l) {
              const std::string t = trim(v);
              if (t == "drop") c.noise.small_jumps = SmallJumps::Drop;
              else if (t == "gaussian") c.noise.small_jumps = SmallJumps::Gaussian;
              else throw ConfigError("noise.small_jumps", l, "expected drop or gaussian");
            },
            [](const RunConfig& c) {
              return std::string(c.noise.small_jumps == SmallJumps::Drop ? "drop" : "gaussian");
            }},
      LEVYAP_DOUBLE("model.epsilon", epsilon, "noise intensity eps in [0, 1)"),
      LEVYAP_DOUBLE("model.beta", run.beta, "rescaling exponent of the angular transform"),
      LEVYAP_DOUBLE("integrator.dt", run.stepper.dt, "time step"),
      LEVYAP_UINT("integrator.flow_substeps", run.stepper.flow_substeps, "RK4 substeps of each jump flow", true),
      LEVYAP_DOUBLE("integrator.tol_crit", run.stepper.tol_crit, "critical-point exit threshold on |grad H|"),
      LEVYAP_DOUBLE("integrator.bound_explode", run.stepper.bound_explode, "explosion threshold on |x|"),
      LEVYAP_DOUBLE("run.horizon", run.horizon, "time horizon per replicate"),
      LEVYAP_DOUBLE("run.burn_in", run.burn_in, "fraction of the horizon discarded"),
      LEVYAP_UINT("run.replicates", run.replicates, "independent replicates", true),
      LEVYAP_UINT("run.seed", run.seed, "master seed", true),
      LEVYAP_UINT("run.threads", run.threads, "worker threads, 0 for all cores", false),
      LEVYAP_UINT("run.renorm_interval", run.renorm_interval, "steps between tangent renormalisations", true),
      LEVYAP_UINT("run.max_attempts", run.max_attempts, "attempts per replicate after early exits", true),
      Entry{"run.x0", "initial point x1,x2", true,
            [](RunConfig& c, const std::string& v, std::size_t l) { c.run.x0 = to_vec2("run.x0", v, l); },
            [](const RunConfig& c) { return format_double(c.run.x0.x) + "," + format_double(c.run.x0.y); }},
      Entry{"run.v0", "initial tangent v1,v2", true,
            [](RunConfig& c, const std::string& v, std::size_t l) { c.run.v0 = to_vec2("run.v0", v, l); },
            [](const RunConfig& c) { return format_double(c.run.v0.x) + "," + format_double(c.run.v0.y); }},
      LEVYAP_STRING("estimator.method", method, "direct, khasminskii, theorem33 or fpcircle", true),
      LEVYAP_STRING("estimator.compare", compare, "second method checked for agreement, empty for none", true),
      LEVYAP_UINT("estimator.quadrature_nodes", run.quadrature_nodes, "jump-measure quadrature nodes per sign", true),
      LEVYAP_UINT("estimator.theta_bins", run.theta_bins, "angle bins of the occupation measure", true),
      LEVYAP_UINT("estimator.x_bins", run.x_bins, "position bins per axis of the occupation measure", true),
      LEVYAP_UINT("estimator.r0_z_nodes", sigma0.r0.z_nodes, "jump quadrature nodes per sign for R0", true),
      LEVYAP_BOOL("estimator.irho_fallback", sigma0.irho_fallback, "use the rescaled jump drift instead of R0", true),
      LEVYAP_UINT("fpcircle.grid_n", grid_n, "circle grid size, even and >= 16", true),
      LEVYAP_STRING("fpcircle.variant", fp_variant, "plain or pw", true),
      LEVYAP_UINT("simulate.stride", stride, "steps between trajectory rows", true),
      LEVYAP_BOOL("simulate.polar", polar, "add the tangent angle and log-norm columns", true),
      Entry{"sweep.epsilons", "comma-separated eps values", true,
            [](RunConfig& c, const std::string& v, std::size_t l) {
              c.sweep_epsilons = to_list("sweep.epsilons", v, l);
            },
            [](const RunConfig& c) { return from_list(c.sweep_epsilons); }},
      LEVYAP_STRING("output.csv", out_csv, "CSV output path, - for stdout", false),
      LEVYAP_STRING("output.json", out_json, "JSON output path, - for stdout", false),
      LEVYAP_BOOL("output.runtime", report_runtime, "include wall-clock runtime in the JSON", false),
  };
  return table;
}

#undef LEVYAP_DOUBLE
#undef LEVYAP_UINT
#undef LEVYAP_BOOL
#undef LEVYAP_STRING

const Entry& find_entry(const std::string& key, std::size_t line) {
  static const auto index = [] {
    std::unordered_map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < entries().size(); ++i) m.emplace(entries()[i].key, i);
    return m;
  }();
  const auto it = index.find(key);
  if (it == index.end()) throw ConfigError(key, line, "unknown key");
  return entries()[it->second];
}

}  // namespace

void RunConfig::validate() const {
  if (system != "nilpotent" && system != "duffing")
    throw ConfigError("system.name", 0, "expected nilpotent or duffing");
  if (!(a > 0.0)) throw ConfigError("system.a", 0, "must be positive");
  if (!(sigma > 0.0)) throw ConfigError("system.sigma", 0, "must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("model.epsilon", 0, "must lie in [0, 1)");
  auto known_method = [](const std::string& m) {
    return m == "direct" || m == "khasminskii" || m == "theorem33" || m == "fpcircle";
  };
  if (!known_method(method)) throw ConfigError("estimator.method", 0, "unknown method '" + method + "'");
  if (!compare.empty() && !known_method(compare))
    throw ConfigError("estimator.compare", 0, "unknown method '" + compare + "'");
  if (fp_variant != "plain" && fp_variant != "pw")
    throw ConfigError("fpcircle.variant", 0, "expected plain or pw");
  if (grid_n < 16 || grid_n % 2 != 0) throw ConfigError("fpcircle.grid_n", 0, "must be even and >= 16");
  if (stride == 0) throw ConfigError("simulate.stride", 0, "must be positive");
  try {
    noise.validate();
    run.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("", 0, e.what());
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

std::string config_help(const std::string& key) { return find_entry(key, 0).help; }

bool is_experiment_key(const std::string& key) { return find_entry(key, 0).experiment; }

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                      std::size_t line) {
  find_entry(key, line).set(cfg, value, line);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return find_entry(key, 0).get(cfg);
}

void parse_config(std::istream& in, RunConfig& cfg) {
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("", line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    set_config_value(cfg, key, text.substr(eq + 1), line);
  }
}

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
  std::stringstream text;
  text << in.rdbuf();
  const std::string body = text.str();
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || body[first] != '{') {
    std::istringstream is(body);
    parse_config(is, cfg);
    return;
  }
  // A JSON summary written by the tool: replay its embedded config.
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", 0, std::string("malformed JSON config: ") + e.what());
  }
  const nlohmann::json& c = j.contains("config") ? j["config"] : j;
  if (!c.is_object()) throw ConfigError("", 0, "JSON config must be an object");
  for (const auto& [k, v] : c.items()) set_config_value(cfg, k, v.is_string() ? v.get<std::string>() : v.dump());
}

std::map<std::string, std::string> config_map(const RunConfig& cfg, bool experiment_only) {
  std::map<std::string, std::string> out;
  for (const auto& e : entries())
    if (!experiment_only || e.experiment) out[e.key] = e.get(cfg);
  return out;
}

void write_config(std::ostream& os, const RunConfig& cfg, bool experiment_only) {
  for (const auto& e : entries()) {
    if (experiment_only && !e.experiment) continue;
    os << "# " << e.help << "\n" << e.key << " = " << e.get(cfg) << "\n";
  }
}

}  // namespace levyap
