#include "levyap/marcus.hpp"

#include <cmath>

namespace levyap {

const char* to_string(ExitFlag flag) {
  switch (flag) {
    case ExitFlag::None: return "none";
    case ExitFlag::CriticalPoint: return "critical-point";
    case ExitFlag::Explosion: return "explosion";
  }
  return "unknown";
}

Mat2 VectorFieldSet::correction_jacobian(std::size_t k, const Vec2& x) const {
  const double h = 1e-6 * (1.0 + norm(x));
  Mat2 out;
  for (std::size_t j = 0; j < 2; ++j) {
    Vec2 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec2 gp = field_jacobian(k, xp) * field(k, xp);
    const Vec2 gm = field_jacobian(k, xm) * field(k, xm);
    const Vec2 col = (1.0 / (2.0 * h)) * (gp - gm);
    if (j == 0) {
      out.xx = col.x;
      out.yx = col.y;
    } else {
      out.xy = col.x;
      out.yy = col.y;
    }
  }
  return out;
}

void StepperConfig::validate() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidParameter, "dt must be > 0");
  require(flow_substeps >= 1, ErrorKind::InvalidParameter, "flow_substeps must be >= 1");
  require(tol_crit >= 0.0, ErrorKind::InvalidParameter, "tol_crit must be >= 0");
  require(bound_explode > 0.0, ErrorKind::InvalidParameter, "bound_explode must be > 0");
  require(compensator_quadrature_nodes >= 1, ErrorKind::InvalidParameter,
          "compensator_quadrature_nodes must be >= 1");
}

ExitDetected::ExitDetected(ExitFlag flag, double time, const Vec2& x)
    : Error(ErrorKind::ExitDetected,
            std::string(to_string(flag)) + " at t = " + std::to_string(time)),
      flag_(flag),
      time_(time),
      x_(x) {}

ExitFlag classify_position(const VectorFieldSet& fields, const Vec2& x, const StepperConfig& cfg) {
  if (!std::isfinite(x.x) || !std::isfinite(x.y) || norm(x) > cfg.bound_explode)
    return ExitFlag::Explosion;
  if (fields.domain_margin(x) < cfg.tol_crit) return ExitFlag::CriticalPoint;
  return ExitFlag::None;
}

namespace {

Vec2 jump_field(const VectorFieldSet& f, double eps, const Marks& z, const Vec2& x) {
  Vec2 out;
  for (std::size_t k = 0; k < f.dimension(); ++k)
    if (z[k] != 0.0) out += (eps * z[k]) * f.field(k, x);
  return out;
}

Mat2 jump_field_jacobian(const VectorFieldSet& f, double eps, const Marks& z, const Vec2& x) {
  Mat2 out;
  for (std::size_t k = 0; k < f.dimension(); ++k)
    if (z[k] != 0.0) out += (eps * z[k]) * f.field_jacobian(k, x);
  return out;
}

// Index of the single nonzero mark, or -1.
int single_component(const Marks& z, std::size_t dim) {
  int found = -1;
  for (std::size_t k = 0; k < dim; ++k) {
    if (z[k] == 0.0) continue;
    if (found >= 0) return -1;
    found = static_cast<int>(k);
  }
  return found;
}

}  // namespace

JumpFlow marcus_jump_flow(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                          std::size_t substeps, bool with_jacobian, double tol_crit) {
  require(substeps >= 1, ErrorKind::InvalidParameter, "flow substeps must be >= 1");
  JumpFlow out{x, Mat2::identity()};
  bool zero = true;
  for (std::size_t k = 0; k < fields.dimension(); ++k) zero = zero && z[k] == 0.0;
  if (zero || eps == 0.0) return out;

  const double h = 1.0 / static_cast<double>(substeps);
  Vec2 y = x;
  Mat2 J = Mat2::identity();
  for (std::size_t i = 0; i < substeps; ++i) {
    const Vec2 k1 = jump_field(fields, eps, z, y);
    const Vec2 y2 = y + (0.5 * h) * k1;
    const Vec2 k2 = jump_field(fields, eps, z, y2);
    const Vec2 y3 = y + (0.5 * h) * k2;
    const Vec2 k3 = jump_field(fields, eps, z, y3);
    const Vec2 y4 = y + h * k3;
    const Vec2 k4 = jump_field(fields, eps, z, y4);
    if (with_jacobian) {
      const Mat2 a1 = jump_field_jacobian(fields, eps, z, y);
      const Mat2 j1 = a1 * J;
      const Mat2 j2 = jump_field_jacobian(fields, eps, z, y2) * (J + (0.5 * h) * j1);
      const Mat2 j3 = jump_field_jacobian(fields, eps, z, y3) * (J + (0.5 * h) * j2);
      const Mat2 j4 = jump_field_jacobian(fields, eps, z, y4) * (J + h * j3);
      J += (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
    }
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(y.x) || !std::isfinite(y.y) ||
        (tol_crit > 0.0 && fields.domain_margin(y) < tol_crit))
      fail(ErrorKind::FlowEscape, "jump flow left the domain");
  }
  out.x = y;
  out.jacobian = J;
  return out;
}

Vec2 marcus_jump_map(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                     std::size_t substeps) {
  return marcus_jump_flow(fields, eps, z, x, substeps, false).x;
}

Mat2 marcus_jump_jacobian(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                          std::size_t substeps) {
  return marcus_jump_flow(fields, eps, z, x, substeps, true).jacobian;
}

Vec2 compensator_drift(const VectorFieldSet& fields, double eps, const JumpMeasureSpec& measure,
                       const Vec2& x, std::size_t nodes_per_sign, std::size_t substeps) {
  const JumpQuadrature q = jump_quadrature(measure, nodes_per_sign);
  Vec2 total;
  for (std::size_t k = 0; k < fields.dimension(); ++k) {
    const Vec2 vk = fields.field(k, x);
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Marks z{};
        z[k] = sign * q.marks[i];
        const Vec2 moved = marcus_jump_map(fields, eps, z, x, substeps);
        total += q.weights[i] * (moved - x - (eps * z[k]) * vk);
      }
    }
  }
  return total;
}

MarcusStepper::MarcusStepper(const VectorFieldSet& fields, double eps, const NoiseModel& noise,
                             const StepperConfig& cfg)
    : fields_(fields), eps_(eps), dim_(fields.dimension()), cfg_(cfg) {
  cfg_.validate();
  noise.validate();
  require(eps >= 0.0 && eps < 1.0, ErrorKind::InvalidParameter, "epsilon must lie in [0, 1)");
  require(noise.dimension() == dim_, ErrorKind::InvalidParameter,
          "noise dimension differs from the number of fields");
  correction_ = 0.5 * eps * eps * noise.continuous_variance();
}

void MarcusStepper::drift_step(TrajectoryState& s, double h) const {
  const bool tangent = s.has_tangent;
  auto f = [&](const Vec2& x) {
    Vec2 out = fields_.drift(x);
    if (correction_ != 0.0)
      for (std::size_t k = 0; k < dim_; ++k)
        out += correction_ * (fields_.field_jacobian(k, x) * fields_.field(k, x));
    return out;
  };
  auto jf = [&](const Vec2& x) {
    Mat2 out = fields_.drift_jacobian(x);
    if (correction_ != 0.0)
      for (std::size_t k = 0; k < dim_; ++k) out += correction_ * fields_.correction_jacobian(k, x);
    return out;
  };
  const Vec2 x = s.x;
  const Vec2 k1 = f(x);
  const Vec2 x2 = x + (0.5 * h) * k1;
  const Vec2 k2 = f(x2);
  const Vec2 x3 = x + (0.5 * h) * k2;
  const Vec2 k3 = f(x3);
  const Vec2 x4 = x + h * k3;
  const Vec2 k4 = f(x4);
  if (tangent) {
    const Vec2 v = s.v;
    const Vec2 l1 = jf(x) * v;
    const Vec2 l2 = jf(x2) * (v + (0.5 * h) * l1);
    const Vec2 l3 = jf(x3) * (v + (0.5 * h) * l2);
    const Vec2 l4 = jf(x4) * (v + h * l3);
    s.v = v + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  s.x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

JumpFlow apply_marcus_jump(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                           std::size_t substeps, bool with_jacobian, double tol_crit) {
  const int k = single_component(z, fields.dimension());
  if (k >= 0 && fields.linear_nilpotent_noise()) {
    const Mat2 n = (eps * z[static_cast<std::size_t>(k)]) * fields.field_jacobian(k, x);
    JumpFlow out;
    out.x = x + n * x;
    out.jacobian = Mat2::identity() + n;
    return out;
  }
  return marcus_jump_flow(fields, eps, z, x, substeps, with_jacobian, tol_crit);
}

void MarcusStepper::apply_jump(TrajectoryState& s, const Marks& z) const {
  const JumpFlow flow =
      apply_marcus_jump(fields_, eps_, z, s.x, cfg_.flow_substeps, s.has_tangent, cfg_.tol_crit);
  s.x = flow.x;
  if (s.has_tangent) s.v = flow.jacobian * s.v;
}

void MarcusStepper::continuous_step(TrajectoryState& s, const IncrementBatch& batch) const {
  drift_step(s, batch.dt);
  if (eps_ == 0.0) return;
  Vec2 dx, dv;
  for (std::size_t k = 0; k < dim_; ++k) {
    const double db = batch.brownian[k];
    if (db == 0.0) continue;
    dx += (eps_ * db) * fields_.field(k, s.x);
    if (s.has_tangent) dv += (eps_ * db) * (fields_.field_jacobian(k, s.x) * s.v);
  }
  s.x += dx;
  s.v += dv;
}

void MarcusStepper::step(TrajectoryState& s, const IncrementBatch& batch) const {
  const double h = batch.dt;
  continuous_step(s, batch);

  if (eps_ != 0.0) {

    auto jump_at = [&](const Marks& z, double offset) {
      try {
        apply_jump(s, z);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FlowEscape) throw;
        s.exit = ExitFlag::CriticalPoint;
        throw ExitDetected(s.exit, s.t + offset, s.x);
      }
    };
    if (batch.aggregated) {
      if (batch.jump_count > 0) jump_at(batch.mark_sum, h);
    } else {
      for (const Jump& j : batch.jumps) {
        Marks z{};
        z[j.component] = j.mark;
        jump_at(z, j.offset);
      }
    }
  }

  s.t += h;
  s.exit = classify_position(fields_, s.x, cfg_);
  if (s.exit != ExitFlag::None) throw ExitDetected(s.exit, s.t, s.x);
}

void step(const VectorFieldSet& fields, double eps, const NoiseModel& noise, TrajectoryState& state,
          const IncrementBatch& batch, const StepperConfig& cfg) {
  MarcusStepper(fields, eps, noise, cfg).step(state, batch);
}

TrajectorySummary integrate(const VectorFieldSet& fields, double eps, const NoiseModel& noise,
                            const Vec2& x0, double horizon, const StepperConfig& cfg, Stream& rng,
                            const StepObserver& observer, const Vec2* v0) {
  require(horizon >= 0.0, ErrorKind::InvalidParameter, "horizon must be >= 0");
  MarcusStepper stepper(fields, eps, noise, cfg);
  TrajectorySummary out;
  TrajectoryState& s = out.final_state;
  s.x = x0;
  if (v0) {
    s.has_tangent = true;
    s.v = *v0;
  }
  s.exit = classify_position(fields, x0, cfg);
  if (s.exit != ExitFlag::None) throw ExitDetected(s.exit, 0.0, x0);
  if (observer) observer(s);

  const auto n = static_cast<std::uint64_t>(std::ceil(horizon / cfg.dt - 1e-9));
  if (n == 0) return out;
  IncrementSampler sampler(noise, cfg.dt, fields.dimension() == 1);
  IncrementBatch batch;
  for (std::uint64_t i = 0; i < n; ++i) {
    sampler.sample(rng, batch);
    stepper.step(s, batch);
    ++out.steps;
    out.jumps += batch.jump_count;
    if (observer) observer(s);
  }
  return out;
}

}  // namespace levyap
