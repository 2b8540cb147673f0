#pragma once

// Experiment configuration: a flat list of dotted keys, read from
// `key = value` text and from command-line overrides.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "levyap/estimators.hpp"
#include "levyap/noise.hpp"

namespace levyap {

struct RunConfig {
  std::string system = "nilpotent";
  double a = 1.0;
  double sigma = 1.0;
  NoiseModel noise;
  double epsilon = 0.1;
  RunSettings run;
  std::string method = "direct";
  std::string compare;  // optional second method for the agreement gate
  Sigma0Options sigma0;
  std::size_t grid_n = 512;
  std::string fp_variant = "plain";
  std::size_t stride = 100;  // simulate: steps between rows
  bool polar = true;         // simulate: add theta, rho of the tangent
  std::vector<double> sweep_epsilons;
  std::string out_csv = "-";
  std::string out_json = "-";
  bool report_runtime = false;

  void validate() const;
};

// Raised for malformed config text or values; `key` and `line` locate it.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, std::size_t line, const std::string& what);
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

// Every key, in output order.
const std::vector<std::string>& config_keys();
std::string config_help(const std::string& key);

// Sets one key from its text form; throws ConfigError.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                      std::size_t line = 0);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// Applies `key = value` lines on top of `cfg`. Blank lines and '#' comments
// are skipped; unknown keys are rejected.
void parse_config(std::istream& in, RunConfig& cfg);
void load_config_file(const std::string& path, RunConfig& cfg);

// Keys that describe the experiment, as opposed to how it is executed
// (threads, output paths). Only these are embedded in result summaries.
bool is_experiment_key(const std::string& key);

void write_config(std::ostream& os, const RunConfig& cfg, bool experiment_only = false);
std::map<std::string, std::string> config_map(const RunConfig& cfg, bool experiment_only);

std::string format_double(double v);

}  // namespace levyap
