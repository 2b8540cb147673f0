#include "levyap/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "levyap/parallel.hpp"
#include "levyap/rng.hpp"

namespace levyap {

void RunSettings::validate() const {
  require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::InvalidParameter, "horizon must be > 0");
  require(burn_in >= 0.0 && burn_in < 1.0, ErrorKind::InvalidParameter, "burn_in must lie in [0, 1)");
  require(replicates >= 1, ErrorKind::InvalidParameter, "replicates must be >= 1");
  require(renorm_interval >= 1, ErrorKind::InvalidParameter, "renorm_interval must be >= 1");
  require(beta > 0.0 && beta < 1.0, ErrorKind::InvalidParameter, "beta must lie in (0, 1)");
  require(norm(v0) > 0.0, ErrorKind::InvalidParameter, "v0 must be nonzero");
  require(max_attempts >= 1, ErrorKind::InvalidParameter, "max_attempts must be >= 1");
  require(quadrature_nodes >= 1, ErrorKind::InvalidParameter, "quadrature_nodes must be >= 1");
  require(theta_bins >= 1 && x_bins >= 1, ErrorKind::InvalidParameter, "bin counts must be >= 1");
  stepper.validate();
}

// ---------------------------------------------------------------------------
// Occupation measure

OccupationMeasure::OccupationMeasure(std::size_t theta_bins, std::size_t nx, std::size_t ny, Vec2 lo,
                                     Vec2 hi)
    : nt_(theta_bins), nx_(nx), ny_(ny), lo_(lo), hi_(hi), mass_(theta_bins * nx * ny, 0.0) {
  require(theta_bins >= 1 && nx >= 1 && ny >= 1, ErrorKind::InvalidParameter, "empty histogram");
}

OccupationMeasure OccupationMeasure::theta_only(std::size_t theta_bins) {
  return OccupationMeasure(theta_bins, 1, 1, {}, {});
}

namespace {
std::size_t cell(double v, double lo, double hi, std::size_t n) {
  if (n == 1 || !(hi > lo)) return 0;
  const double f = (v - lo) / (hi - lo) * static_cast<double>(n);
  if (!(f > 0.0)) return 0;
  return std::min(n - 1, static_cast<std::size_t>(f));
}
}  // namespace

void OccupationMeasure::add(const Vec2& x, double theta, double weight) {
  const std::size_t ix = cell(x.x, lo_.x, hi_.x, nx_);
  const std::size_t iy = cell(x.y, lo_.y, hi_.y, ny_);
  const std::size_t it = cell(wrap_angle(theta), 0.0, kTwoPi, nt_);
  mass_[(ix * ny_ + iy) * nt_ + it] += weight;
}

void OccupationMeasure::merge(const OccupationMeasure& other) {
  require(other.mass_.size() == mass_.size(), ErrorKind::InvalidParameter,
          "occupation measures differ in shape");
  for (std::size_t i = 0; i < mass_.size(); ++i) mass_[i] += other.mass_[i];
}

double OccupationMeasure::total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

void OccupationMeasure::normalize() {
  const double t = total();
  require(t > 0.0, ErrorKind::EmptyMeasure, "occupation measure has no mass");
  for (double& m : mass_) m /= t;
}

Vec2 OccupationMeasure::x_center(std::size_t bin) const {
  const std::size_t xy = bin / nt_;
  const std::size_t ix = xy / ny_, iy = xy % ny_;
  return {lo_.x + (hi_.x - lo_.x) * (ix + 0.5) / nx_, lo_.y + (hi_.y - lo_.y) * (iy + 0.5) / ny_};
}

double OccupationMeasure::theta_center(std::size_t bin) const {
  return kTwoPi * ((bin % nt_) + 0.5) / nt_;
}

void orbit_box(const SystemModel& system, const Vec2& x0, Vec2& lo, Vec2& hi) {
  lo = hi = x0;
  Vec2 x = x0;
  const double h = 1e-2;
  for (int i = 0; i < 5000; ++i) {
    const Vec2 k1 = system.drift(x);
    const Vec2 k2 = system.drift(x + (0.5 * h) * k1);
    const Vec2 k3 = system.drift(x + (0.5 * h) * k2);
    const Vec2 k4 = system.drift(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    lo = {std::min(lo.x, x.x), std::min(lo.y, x.y)};
    hi = {std::max(hi.x, x.x), std::max(hi.y, x.y)};
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const double size = hi[j] - lo[j] > 0.0 ? hi[j] - lo[j] : 1.0;
    lo[j] -= 0.5 * size;
    hi[j] += 0.5 * size;
  }
}

// ---------------------------------------------------------------------------
// Replicate plumbing

namespace {

constexpr std::size_t kBatches = 10;

struct Outcome {
  bool ok = false;
  std::size_t failures = 0;
  double lambda = 0.0;
  double lambda_frame = 0.0;
  double lambda_pw = 0.0;
  double martingale = 0.0;
  std::vector<double> batches;  // per-batch rates, for single-replicate errors
  OccupationMeasure occupation;
};

std::uint64_t step_count(double horizon, double dt) {
  return static_cast<std::uint64_t>(std::ceil(horizon / dt - 1e-9));
}

template <typename Attempt>
Outcome run_replicate(const RunSettings& s, std::size_t r, const Attempt& attempt) {
  for (std::size_t a = 0; a < s.max_attempts; ++a) {
    Stream rng = make_stream(s.seed, static_cast<std::uint64_t>(r) + (static_cast<std::uint64_t>(a) << 32));
    try {
      Outcome out = attempt(rng);
      out.ok = true;
      out.failures = a;
      return out;
    } catch (const ExitDetected&) {
    }
  }
  Outcome out;
  out.failures = s.max_attempts;
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

LyapunovEstimate reduce(const std::vector<Outcome>& outcomes, const RunSettings& s, double eps,
                        const std::string& method) {
  LyapunovEstimate e;
  e.method = method;
  e.epsilon = eps;
  e.beta = s.beta;
  e.horizon = s.horizon;
  e.renorm_interval = s.renorm_interval;
  std::vector<double> frame, pw, mart;
  const Outcome* single = nullptr;
  for (const Outcome& o : outcomes) {
    e.restarts += o.failures;
    if (!o.ok) continue;
    single = &o;
    e.per_replicate.push_back(o.lambda);
    frame.push_back(o.lambda_frame);
    pw.push_back(o.lambda_pw);
    mart.push_back(o.martingale);
  }
  if (e.per_replicate.empty())
    fail(ErrorKind::AllTrajectoriesExited, "every replicate left the domain before horizon/2");
  e.replicates = e.per_replicate.size();
  e.value = mean_of(e.per_replicate);
  e.value_frame = mean_of(frame);
  e.value_pw = mean_of(pw);
  e.martingale_mean = mean_of(mart);
  if (e.replicates >= 2) {
    e.std_error = std_error_of(e.per_replicate);
    e.martingale_std_error = std_error_of(mart);
  } else if (single && single->batches.size() >= 2) {
    e.std_error = std_error_of(single->batches);
  }
  e.unreliable = static_cast<double>(e.restarts) > 0.1 * static_cast<double>(s.replicates);
  return e;
}

template <typename Attempt>
std::vector<Outcome> run_all(const RunSettings& s, const Attempt& attempt) {
  std::vector<Outcome> outcomes(s.replicates);
  parallel_for(s.replicates, s.threads,
               [&](std::size_t r) { outcomes[r] = run_replicate(s, r, attempt); });
  return outcomes;
}

std::vector<double> batch_rates(const std::vector<double>& checkpoints, double batch_time) {
  std::vector<double> out;
  for (std::size_t b = 1; b < checkpoints.size(); ++b)
    out.push_back((checkpoints[b] - checkpoints[b - 1]) / batch_time);
  return out;
}

double frame_log_ratio(const SystemModel& system, const Vec2& x, const Vec2& v, double scale) {
  try {
    const Vec2 w = system.to_frame(x, v);
    return std::log(std::hypot(scale * w.x, w.y) / norm(v));
  } catch (const Error&) {
    return std::nan("");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Direct tangent growth

LyapunovEstimate lyapunov_direct(const SystemModel& system, const NoiseModel& noise, double eps,
                                 const RunSettings& s) {
  s.validate();
  const double dt = s.stepper.dt;
  const std::uint64_t n = step_count(s.horizon, dt);
  const std::uint64_t per_batch = std::max<std::uint64_t>(1, n / kBatches);
  const double eb = std::pow(eps, s.beta);
  MarcusStepper stepper(system, eps, noise, s.stepper);
  const Vec2 v0 = (1.0 / norm(s.v0)) * s.v0;
  const double frame0 = frame_log_ratio(system, s.x0, v0, 1.0);
  const double pw0 = frame_log_ratio(system, s.x0, v0, eb);

  auto attempt = [&](Stream& rng) {
    IncrementSampler sampler(noise, dt, system.dimension() == 1);
    IncrementBatch batch;
    TrajectoryState st;
    st.x = s.x0;
    st.has_tangent = true;
    st.v = v0;
    st.exit = classify_position(system, st.x, s.stepper);
    if (st.exit != ExitFlag::None) throw ExitDetected(st.exit, 0.0, st.x);

    double log_sum = 0.0;
    std::size_t since = 0;
    std::vector<double> checkpoints{0.0};
    Outcome out;
    for (std::uint64_t i = 0; i < n; ++i) {
      const TrajectoryState prev = st;
      sampler.sample(rng, batch);
      try {
        stepper.step(st, batch);
      } catch (const ExitDetected& e) {
        if (e.time() < 0.5 * s.horizon || prev.t <= 0.0) throw;
        out.lambda = (log_sum + std::log(norm(prev.v))) / prev.t;
        out.lambda_frame = out.lambda_pw = out.lambda;
        return out;
      }
      const double nv = norm(st.v);
      if (++since >= s.renorm_interval || !(nv < 1e9 && nv > 1e-9)) {
        log_sum += std::log(nv);
        st.v = (1.0 / nv) * st.v;
        since = 0;
        if (system.homogeneous()) st.x = (1.0 / norm(st.x)) * st.x;
      }
      if ((i + 1) % per_batch == 0) checkpoints.push_back(log_sum + std::log(norm(st.v)));
    }
    const double total = static_cast<double>(n) * dt;
    const double growth = log_sum + std::log(norm(st.v));
    out.lambda = growth / total;
    out.lambda_frame = out.lambda + (frame_log_ratio(system, st.x, st.v, 1.0) - frame0) / total;
    out.lambda_pw = out.lambda + (frame_log_ratio(system, st.x, st.v, eb) - pw0) / total;
    out.batches = batch_rates(checkpoints, static_cast<double>(per_batch) * dt);
    return out;
  };
  return reduce(run_all(s, attempt), s, eps, "direct");
}

// ---------------------------------------------------------------------------
// Khasminskii drift average on (x, theta)

LyapunovEstimate lyapunov_khasminskii(const SystemModel& system, const NoiseModel& noise,
                                      double eps, const RunSettings& s,
                                      OccupationMeasure* occupation) {
  s.validate();
  const double dt = s.stepper.dt;
  const std::uint64_t n = step_count(s.horizon, dt);
  const auto burn = static_cast<std::uint64_t>(std::floor(s.burn_in * static_cast<double>(n)));
  const std::uint64_t kept = n - burn;
  const std::uint64_t per_batch = std::max<std::uint64_t>(1, kept / kBatches);
  const double eb = std::pow(eps, s.beta);
  const double q = noise.continuous_variance();
  const std::size_t dim = system.dimension();
  const GradeScales scales = grade_scales(eps, s.beta);
  MarcusStepper stepper(system, eps, noise, s.stepper);
  const bool jumps = noise.has_jumps() && eps > 0.0;
  std::optional<IrhoEvaluator> irho;
  if (jumps)
    irho.emplace(system, noise.measure, eps, s.beta, s.quadrature_nodes, s.stepper.flow_substeps);

  const bool collect = s.collect_occupation && occupation != nullptr;
  OccupationMeasure blank;
  if (collect) {
    if (system.homogeneous() || system.constant_coefficients()) {
      blank = OccupationMeasure(s.theta_bins, 1, 1, s.x0, s.x0);
    } else {
      Vec2 lo, hi;
      orbit_box(system, s.x0, lo, hi);
      blank = OccupationMeasure(s.theta_bins, s.x_bins, s.x_bins, lo, hi);
    }
  }

  const Vec2 w0 = system.to_frame(s.x0, s.v0);
  const double theta0 = std::atan2(w0.y, eb * w0.x);

  auto attempt = [&](Stream& rng) {
    IncrementSampler sampler(noise, dt, dim == 1);
    IncrementBatch batch;
    TrajectoryState st;
    st.x = s.x0;
    st.exit = classify_position(system, st.x, s.stepper);
    if (st.exit != ExitFlag::None) throw ExitDetected(st.exit, 0.0, st.x);
    double theta = theta0;
    Outcome out;
    if (collect) out.occupation = blank;

    double sum_p = 0.0, mart = 0.0, batch_sum = 0.0;
    std::uint64_t counted = 0, in_batch = 0;
    FieldDerivatives along{};
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec2 x = st.x;
      const double c = std::cos(theta), sn = std::sin(theta);
      const FrameCoefficients f = system.coefficients(x);
      const bool varying = !system.constant_coefficients();
      if (varying)
        for (std::size_t k = 0; k < dim; ++k) along[k] = system.coefficients_along_field(k, x);
      const GradedTerms g = graded_terms(f, theta, scales, varying ? &along : nullptr);
      const double ir = jumps ? (*irho)(x, theta) : 0.0;
      double wz1 = 0.0, wz2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        wz1 += g.sigma1_tilde[k];
        wz2 += g.sigma2_tilde[k];
      }
      const double p = eb * f.A * sn * c + 0.5 * q * wz2 + ir;
      const double theta_drift = -eb * f.A * sn * sn + 0.5 * q * wz1;

      sampler.sample(rng, batch);
      double d_theta = theta_drift * dt, d_rho_mart = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        d_theta += g.sigma1[k] * batch.brownian[k];
        d_rho_mart += g.sigma2[k] * batch.brownian[k];
      }
      stepper.continuous_step(st, batch);
      theta += d_theta;

      try {
        auto jump = [&](const Marks& z) {
          const AngularJump j =
              angular_jump(system, st.x, theta, z, eps, s.beta, s.stepper.flow_substeps);
          st.x = j.x;
          theta = j.theta;
          d_rho_mart += j.rho;
        };
        if (batch.aggregated) {
          if (batch.jump_count > 0) jump(batch.mark_sum);
        } else {
          for (const Jump& jm : batch.jumps) {
            Marks z{};
            z[jm.component] = jm.mark;
            jump(z);
          }
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FlowEscape && e.kind() != ErrorKind::CriticalPoint) throw;
        st.exit = ExitFlag::CriticalPoint;
      }
      st.t += dt;
      if (st.exit == ExitFlag::None) st.exit = classify_position(system, st.x, s.stepper);
      if (st.exit != ExitFlag::None) {
        if (st.t < 0.5 * s.horizon || counted == 0) throw ExitDetected(st.exit, st.t, st.x);
        out.lambda = sum_p / static_cast<double>(counted);
        out.martingale = mart / (static_cast<double>(counted) * dt);
        return out;
      }
      theta = wrap_angle(theta);

      if (i >= burn) {
        sum_p += p;
        batch_sum += p;
        mart += d_rho_mart - ir * dt;
        ++counted;
        if (collect) out.occupation.add(x, std::atan2(sn, c));
        if (++in_batch == per_batch) {
          out.batches.push_back(batch_sum / static_cast<double>(in_batch));
          batch_sum = 0.0;
          in_batch = 0;
        }
      }
      if (system.homogeneous() && (i + 1) % s.renorm_interval == 0)
        st.x = (1.0 / norm(st.x)) * st.x;
    }
    out.lambda = sum_p / static_cast<double>(counted);
    out.martingale = mart / (static_cast<double>(counted) * dt);
    out.lambda_frame = out.lambda_pw = out.lambda;
    return out;
  };

  std::vector<Outcome> outcomes = run_all(s, attempt);
  LyapunovEstimate e = reduce(outcomes, s, eps, "khasminskii");
  if (collect) {
    OccupationMeasure merged = blank;
    for (const Outcome& o : outcomes)
      if (o.ok) merged.merge(o.occupation);
    merged.normalize();
    *occupation = std::move(merged);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Leading-order formula

double lyapunov_theorem33(const SystemModel& system, const NoiseModel& noise, double eps,
                          const OccupationMeasure& occupation, const Sigma0Options& opts,
                          std::size_t threads) {
  const double total = occupation.total();
  if (!(total > 0.0)) fail(ErrorKind::EmptyMeasure, "occupation measure has no mass");
  std::vector<std::size_t> bins;
  for (std::size_t b = 0; b < occupation.size(); ++b)
    if (occupation.mass(b) > 0.0) bins.push_back(b);
  std::vector<double> values(bins.size());
  parallel_for(bins.size(), threads, [&](std::size_t i) {
    const std::size_t b = bins[i];
    values[i] = sigma0(system, noise, occupation.x_center(b), occupation.theta_center(b), eps, opts);
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) acc += occupation.mass(bins[i]) * values[i];
  return std::pow(eps, 2.0 / 3.0) * acc / total;
}

// ---------------------------------------------------------------------------
// Scaling sweep

LogLogFit fit_loglog(const std::vector<double>& eps, const std::vector<double>& values) {
  require(eps.size() == values.size(), ErrorKind::InvalidParameter, "size mismatch in fit");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(values[i] > 0.0) || !(eps[i] > 0.0)) continue;
    lx.push_back(std::log(eps[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 3)
    fail(ErrorKind::NonPositiveEstimate, "fewer than three positive estimates for the log-log fit");
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogLogFit fit;
  fit.points = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(lx.size()));
  return fit;
}

void validate_sweep_epsilons(const std::vector<double>& eps) {
  require(eps.size() >= 4, ErrorKind::InvalidParameter, "a sweep needs at least four eps values");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    require(eps[i] > 0.0 && eps[i] < 1.0, ErrorKind::InvalidParameter, "eps values must lie in (0, 1)");
    if (i > 0)
      require(eps[i] > eps[i - 1], ErrorKind::InvalidParameter, "eps values must be strictly increasing");
  }
  require(eps.back() >= 4.0 * eps.front() * (1.0 - 1e-12), ErrorKind::InvalidParameter,
          "eps values must span at least a factor of 4");
}

SweepResult scaling_sweep(const std::vector<double>& eps, const EstimatorFn& estimator) {
  validate_sweep_epsilons(eps);
  SweepResult out;
  out.epsilons = eps;
  std::vector<double> values;
  for (double e : eps) {
    out.estimates.push_back(estimator(e));
    values.push_back(out.estimates.back().value);
    out.excluded.push_back(!(values.back() > 0.0));
  }
  out.fit = fit_loglog(eps, values);
  return out;
}

SweepResult scaling_sweep(const SystemModel& system, const NoiseModel& noise,
                          const std::vector<double>& eps, const RunSettings& settings) {
  return scaling_sweep(eps, [&](double e) { return lyapunov_direct(system, noise, e, settings); });
}

}  // namespace levyap
