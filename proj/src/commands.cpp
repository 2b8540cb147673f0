#include "levyap/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "levyap/marcus.hpp"
#include "levyap/rng.hpp"
#include "levyap/systems.hpp"

namespace levyap {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kSchema = "# levyap-schema v1\n";

std::string g17(double v) { return format_double(v); }

json config_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& [k, v] : config_map(cfg, true)) out[k] = v;
  return out;
}

json estimate_json(const LyapunovEstimate& e) {
  json out = json::object();
  out["method"] = e.method;
  out["epsilon"] = e.epsilon;
  out["value"] = e.value;
  out["std_error"] = e.std_error;
  out["replicates"] = e.replicates;
  out["restarts"] = e.restarts;
  out["unreliable"] = e.unreliable;
  out["horizon"] = e.horizon;
  out["beta"] = e.beta;
  if (e.method == "direct") {
    out["renorm_interval"] = e.renorm_interval;
    out["value_frame"] = e.value_frame;
    out["value_pw"] = e.value_pw;
  }
  if (e.method == "khasminskii") {
    out["martingale_mean"] = e.martingale_mean;
    out["martingale_std_error"] = e.martingale_std_error;
  }
  return out;
}

json fp_json(const FpSummary& fp) {
  json out = json::object();
  out["variant"] = to_string(fp.variant);
  out["grid_n"] = fp.density.grid.n;
  out["residual"] = fp.density.residual;
  out["adjoint_residual"] = fp.adjoint_residual;
  out["clipped_mass"] = fp.density.clipped_mass;
  out["lambda"] = fp.lambda;
  return out;
}

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << "\n"; }

std::unique_ptr<SystemModel> build_system(const RunConfig& cfg) {
  return make_system(cfg.system, cfg.a, cfg.sigma);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void estimate_rows_header(std::ostream& csv) {
  csv << kSchema << "method,epsilon,kind,index,lambda,stderr,restarts,unreliable\n";
}

void estimate_rows(std::ostream& csv, const LyapunovEstimate& e) {
  for (std::size_t i = 0; i < e.per_replicate.size(); ++i)
    csv << e.method << "," << g17(e.epsilon) << ",replicate," << i << "," << g17(e.per_replicate[i])
        << ",,,\n";
  csv << e.method << "," << g17(e.epsilon) << ",aggregate,," << g17(e.value) << ","
      << g17(e.std_error) << "," << e.restarts << "," << (e.unreliable ? 1 : 0) << "\n";
}

}  // namespace

FpSummary solve_fpcircle(const RunConfig& cfg, double eps) {
  if (cfg.system != "nilpotent")
    throw ConfigError("system.name", 0, "the fpcircle method needs the nilpotent system");
  NilpotentFPParams p;
  p.a = cfg.a;
  p.sigma = cfg.sigma;
  p.eps = eps;
  p.noise = cfg.noise;
  p.nodes_per_sign = cfg.run.quadrature_nodes;
  FpSummary out;
  out.variant = parse_generator_variant(cfg.fp_variant);
  const CircleGrid grid = make_circle_grid(cfg.grid_n);
  const GeneratorMatrix gen = build_generator(p, grid, out.variant, cfg.run.threads);
  out.density = solve_stationary(gen);
  out.lambda = lyapunov_quadrature(out.density, p, out.variant);
  out.adjoint_residual = out.variant == GeneratorVariant::Plain ? adjoint_residual(out.density, p) : 0.0;
  return out;
}

LyapunovEstimate run_method(const RunConfig& cfg, const std::string& method, double eps,
                            FpSummary* fp) {
  if (method == "fpcircle") {
    FpSummary s = solve_fpcircle(cfg, eps);
    LyapunovEstimate e;
    e.method = "fpcircle";
    e.epsilon = eps;
    e.value = s.lambda;
    e.beta = cfg.run.beta;
    if (fp) *fp = std::move(s);
    return e;
  }
  const auto system = build_system(cfg);
  if (method == "direct") return lyapunov_direct(*system, cfg.noise, eps, cfg.run);
  if (method == "khasminskii") return lyapunov_khasminskii(*system, cfg.noise, eps, cfg.run);
  if (method == "theorem33") {
    RunSettings run = cfg.run;
    run.collect_occupation = true;
    OccupationMeasure occ;
    LyapunovEstimate e = lyapunov_khasminskii(*system, cfg.noise, eps, run, &occ);
    Sigma0Options opts = cfg.sigma0;
    opts.r0.beta = cfg.run.beta;
    e.value = lyapunov_theorem33(*system, cfg.noise, eps, occ, opts, cfg.run.threads);
    e.method = "theorem33";
    // The occupation average carries no replicate spread of its own.
    e.std_error = 0.0;
    e.per_replicate.clear();
    e.martingale_mean = e.martingale_std_error = 0.0;
    return e;
  }
  throw ConfigError("estimator.method", 0, "unknown method '" + method + "'");
}

Agreement compare_estimates(const LyapunovEstimate& a, const LyapunovEstimate& b) {
  Agreement g;
  g.difference = std::abs(a.value - b.value);
  g.combined_std_error = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  g.agree = g.difference <= 3.0 * g.combined_std_error;
  return g;
}

int cmd_simulate(const RunConfig& cfg_in, std::ostream& csv, std::ostream& log) {
  RunConfig cfg = cfg_in;
  const double horizon = cfg.run.horizon;
  if (horizon == 0.0) cfg.run.horizon = 1.0;  // validate the rest
  cfg.validate();
  const auto system = build_system(cfg);
  const double dt = cfg.run.stepper.dt;
  const double eps = cfg.epsilon;

  csv << kSchema << "t,x1,x2" << (cfg.polar ? ",theta,rho" : "") << "\n";
  const std::uint64_t steps =
      horizon > 0.0 ? static_cast<std::uint64_t>(std::ceil(horizon / dt - 1e-9)) : 0;
  if (steps == 0) return kExitOk;

  TrajectoryState st;
  st.x = cfg.run.x0;
  st.has_tangent = cfg.polar;
  st.v = cfg.run.v0 * (1.0 / norm(cfg.run.v0));
  double log_norm = std::log(norm(cfg.run.v0));

  char buf[160];
  auto row = [&](double t) {
    if (cfg.polar)
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t, st.x.x, st.x.y,
                    wrap_angle(std::atan2(st.v.y, st.v.x)), log_norm);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t, st.x.x, st.x.y);
    csv << buf;
  };
  auto report_exit = [&](ExitFlag flag, double t) {
    csv << "# exit " << to_string(flag) << " at t=" << g17(t) << "\n";
    log << "trajectory left the domain (" << to_string(flag) << ") at t=" << g17(t) << "\n";
  };

  const ExitFlag start = classify_position(*system, st.x, cfg.run.stepper);
  if (start != ExitFlag::None) {
    report_exit(start, 0.0);
    return kExitOk;
  }
  MarcusStepper stepper(*system, eps, cfg.noise, cfg.run.stepper);
  IncrementSampler sampler(cfg.noise, dt, cfg.noise.dimension() == 1);
  Stream rng = make_stream(cfg.run.seed, 0);
  IncrementBatch batch;
  row(0.0);
  for (std::uint64_t i = 1; i <= steps; ++i) {
    sampler.sample(rng, batch);
    try {
      stepper.step(st, batch);
    } catch (const ExitDetected& e) {
      report_exit(e.flag(), e.time());
      return kExitOk;
    }
    if (cfg.polar) {
      const double n = norm(st.v);
      log_norm += std::log(n);
      st.v = st.v * (1.0 / n);
    }
    if (i % cfg.stride == 0 || i == steps) row(static_cast<double>(i) * dt);
  }
  return kExitOk;
}

int cmd_lyapunov(const RunConfig& cfg, std::ostream& json_out, std::ostream& csv, std::ostream& log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  FpSummary fp;
  const LyapunovEstimate primary = run_method(cfg, cfg.method, cfg.epsilon, &fp);

  json j = json::object();
  j["schema"] = "levyap-schema v1";
  j["command"] = "lyapunov";
  j["config"] = config_json(cfg);
  j["result"] = estimate_json(primary);
  if (cfg.method == "fpcircle") j["fpcircle"] = fp_json(fp);

  estimate_rows_header(csv);
  estimate_rows(csv, primary);

  int code = kExitOk;
  if (!cfg.compare.empty()) {
    FpSummary fp2;
    const LyapunovEstimate second = run_method(cfg, cfg.compare, cfg.epsilon, &fp2);
    estimate_rows(csv, second);
    const Agreement g = compare_estimates(primary, second);
    json c = json::object();
    c["estimate"] = estimate_json(second);
    if (cfg.compare == "fpcircle") c["fpcircle"] = fp_json(fp2);
    c["difference"] = g.difference;
    c["combined_std_error"] = g.combined_std_error;
    c["agree"] = g.agree;
    j["comparison"] = c;
    if (!g.agree) {
      log << "methods disagree: |" << cfg.method << " - " << cfg.compare << "| = " << g17(g.difference)
          << " exceeds 3 x " << g17(g.combined_std_error) << "\n";
      code = kExitFailure;
    }
  }
  const double runtime = seconds_since(t0);
  if (cfg.report_runtime) j["runtime_seconds"] = runtime;
  log << "lyapunov " << cfg.method << ": " << g17(primary.value) << " +- " << g17(primary.std_error)
      << " (" << runtime << " s)\n";
  write_json(json_out, j);
  return code;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& csv, std::ostream& json_out, std::ostream& log) {
  cfg.validate();
  if (cfg.sweep_epsilons.empty()) throw ConfigError("sweep.epsilons", 0, "the epsilon list is empty");
  try {
    validate_sweep_epsilons(cfg.sweep_epsilons);
  } catch (const Error& e) {
    throw ConfigError("sweep.epsilons", 0, e.what());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult r = scaling_sweep(cfg.sweep_epsilons, [&](double eps) {
    const LyapunovEstimate e = run_method(cfg, cfg.method, eps);
    log << "  eps=" << g17(eps) << " lambda=" << g17(e.value) << " +- " << g17(e.std_error) << "\n";
    return e;
  });

  csv << kSchema << "epsilon,lambda,stderr,method,excluded\n";
  for (std::size_t i = 0; i < r.epsilons.size(); ++i)
    csv << g17(r.epsilons[i]) << "," << g17(r.estimates[i].value) << ","
        << g17(r.estimates[i].std_error) << "," << r.estimates[i].method << ","
        << (r.excluded[i] ? 1 : 0) << "\n";

  json j = json::object();
  j["schema"] = "levyap-schema v1";
  j["command"] = "sweep";
  j["config"] = config_json(cfg);
  j["fit"] = {{"slope", r.fit.slope},
              {"intercept", r.fit.intercept},
              {"residual", r.fit.residual},
              {"points", r.fit.points}};
  json rows = json::array();
  for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
    json e = estimate_json(r.estimates[i]);
    e["excluded"] = static_cast<bool>(r.excluded[i]);
    rows.push_back(e);
  }
  j["estimates"] = rows;
  const double runtime = seconds_since(t0);
  if (cfg.report_runtime) j["runtime_seconds"] = runtime;
  log << "sweep slope " << g17(r.fit.slope) << " (" << runtime << " s)\n";
  write_json(json_out, j);
  return kExitOk;
}

int cmd_fp_solve(const RunConfig& cfg, std::ostream& csv, std::ostream& json_out, std::ostream& log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const FpSummary fp = solve_fpcircle(cfg, cfg.epsilon);
  write_density_csv(csv, fp.density);
  json j = json::object();
  j["schema"] = "levyap-schema v1";
  j["command"] = "fp-solve";
  j["config"] = config_json(cfg);
  j["fpcircle"] = fp_json(fp);
  const double runtime = seconds_since(t0);
  if (cfg.report_runtime) j["runtime_seconds"] = runtime;
  log << "fp-solve lambda " << g17(fp.lambda) << " residual " << g17(fp.density.residual) << "\n";
  write_json(json_out, j);
  return kExitOk;
}

int cmd_defaults(std::ostream& out) {
  write_config(out, RunConfig{});
  return kExitOk;
}

}  // namespace levyap
