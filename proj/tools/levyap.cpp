// levyap: simulate perturbed Hamiltonian systems driven by Levy noise and
// estimate their top Lyapunov exponent.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "levyap/commands.hpp"
#include "levyap/config.hpp"

namespace {

using namespace levyap;

struct Overrides {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_file, "config file (key = value lines, or a JSON summary)");
  cmd->add_option("--set", o.sets, "override as key=value, repeatable");
  for (const std::string& key : config_keys())
    cmd->add_option("--" + key, o.flags[key], config_help(key));
  const std::vector<std::pair<std::string, std::string>> aliases = {
      {"--system", "system.name"},    {"--eps", "model.epsilon"},     {"--method", "estimator.method"},
      {"--seed", "run.seed"},         {"--threads", "run.threads"},   {"--out", "output.csv"},
      {"--json", "output.json"},      {"--epsilons", "sweep.epsilons"}};
  for (const auto& [flag, key] : aliases)
    cmd->add_option(flag, o.flags["alias:" + key], "same as --" + key);
}

RunConfig resolve(const Overrides& o, CLI::App* cmd) {
  RunConfig cfg;
  if (!o.config_file.empty()) load_config_file(o.config_file, cfg);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("", 0, "--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [name, value] : o.flags) {
    const bool alias = name.rfind("alias:", 0) == 0;
    const std::string key = alias ? name.substr(6) : name;
    if (alias) {
      static const std::map<std::string, std::string> flag_of = {
          {"system.name", "--system"}, {"model.epsilon", "--eps"},  {"estimator.method", "--method"},
          {"run.seed", "--seed"},      {"run.threads", "--threads"}, {"output.csv", "--out"},
          {"output.json", "--json"},   {"sweep.epsilons", "--epsilons"}};
      if (cmd->count(flag_of.at(key)) == 0) continue;
    } else if (cmd->count("--" + key) == 0) {
      continue;
    }
    set_config_value(cfg, key, value);
  }
  return cfg;
}

// Opens `path` for writing, "-" meaning stdout.
std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path == "-" || path.empty()) return std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) throw Error(ErrorKind::InvalidParameter, "cannot open '" + path + "' for writing");
  return *holder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov exponents of Hamiltonian systems under small Levy noise"};
  app.require_subcommand(1);

  Overrides sim_o, lyap_o, sweep_o, fp_o;
  CLI::App* sim = app.add_subcommand("simulate", "write a trajectory as CSV");
  CLI::App* lyap = app.add_subcommand("lyapunov", "estimate the top Lyapunov exponent");
  CLI::App* sweep = app.add_subcommand("sweep", "estimate over a list of eps and fit the log-log slope");
  CLI::App* fp = app.add_subcommand("fp-solve", "solve the stationary circle density of the nilpotent system");
  CLI::App* defs = app.add_subcommand("defaults", "print every config key with its default");
  add_config_options(sim, sim_o);
  add_config_options(lyap, lyap_o);
  add_config_options(sweep, sweep_o);
  add_config_options(fp, fp_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (defs->parsed()) return cmd_defaults(std::cout);

    std::unique_ptr<std::ofstream> csv_file, json_file;
    if (sim->parsed()) {
      const RunConfig cfg = resolve(sim_o, sim);
      return cmd_simulate(cfg, open_output(cfg.out_csv, csv_file), std::cerr);
    }
    if (lyap->parsed()) {
      const RunConfig cfg = resolve(lyap_o, lyap);
      std::ostream& csv = open_output(cfg.out_csv, csv_file);
      return cmd_lyapunov(cfg, open_output(cfg.out_json, json_file), csv, std::cerr);
    }
    if (sweep->parsed()) {
      const RunConfig cfg = resolve(sweep_o, sweep);
      std::ostream& csv = open_output(cfg.out_csv, csv_file);
      return cmd_sweep(cfg, csv, open_output(cfg.out_json, json_file), std::cerr);
    }
    if (fp->parsed()) {
      const RunConfig cfg = resolve(fp_o, fp);
      std::ostream& csv = open_output(cfg.out_csv, csv_file);
      return cmd_fp_solve(cfg, csv, open_output(cfg.out_json, json_file), std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "levyap: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "levyap: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "levyap: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
