#pragma once

// Subcommands of the levyap tool, writing to caller-supplied streams so that
// they can be driven from tests as well as from the command line.

#include <iosfwd>
#include <optional>
#include <string>

#include "levyap/config.hpp"
#include "levyap/estimators.hpp"
#include "levyap/fpcircle.hpp"

namespace levyap {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct FpSummary {
  CircleDensity density;
  double lambda = 0.0;
  double adjoint_residual = 0.0;
  GeneratorVariant variant = GeneratorVariant::Plain;
};

// Solves the circle problem of the nilpotent system described by `cfg` at eps.
FpSummary solve_fpcircle(const RunConfig& cfg, double eps);

// Runs one estimator by name at eps. For fpcircle the solver summary is
// returned through `fp` when non-null.
LyapunovEstimate run_method(const RunConfig& cfg, const std::string& method, double eps,
                            FpSummary* fp = nullptr);

// Outcome of the agreement gate between two estimates.
struct Agreement {
  double difference = 0.0;
  double combined_std_error = 0.0;
  bool agree = true;
};
Agreement compare_estimates(const LyapunovEstimate& a, const LyapunovEstimate& b);

int cmd_simulate(const RunConfig& cfg, std::ostream& csv, std::ostream& log);
int cmd_lyapunov(const RunConfig& cfg, std::ostream& json, std::ostream& csv, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& csv, std::ostream& json, std::ostream& log);
int cmd_fp_solve(const RunConfig& cfg, std::ostream& csv, std::ostream& json, std::ostream& log);
int cmd_defaults(std::ostream& out);

}  // namespace levyap
