#pragma once

// Marcus-canonical SDE integration on R^2:
//   dx = U1(x) dt + eps * sum_k V_k(x) <> dL^k
// with L a Levy process whose jumps act through the time-one flow of
// eps * sum_k z_k V_k.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "levyap/core.hpp"
#include "levyap/noise.hpp"
#include "levyap/rng.hpp"

namespace levyap {

using Marks = std::array<double, kMaxDrivers>;

class VectorFieldSet {
 public:
  virtual ~VectorFieldSet() = default;

  virtual std::size_t dimension() const = 0;
  virtual Vec2 drift(const Vec2& x) const = 0;
  virtual Mat2 drift_jacobian(const Vec2& x) const = 0;
  // Unscaled V_k; the integrator applies eps.
  virtual Vec2 field(std::size_t k, const Vec2& x) const = 0;
  virtual Mat2 field_jacobian(std::size_t k, const Vec2& x) const = 0;
  // Jacobian of x -> DV_k(x) V_k(x). The default differentiates numerically.
  virtual Mat2 correction_jacobian(std::size_t k, const Vec2& x) const;
  // Compared against tol_crit for exit detection (|grad H| for Hamiltonian systems).
  virtual double domain_margin(const Vec2& x) const = 0;
  // True when every V_k(x) = N_k x with N_k^2 = 0, so a single-component jump
  // map is x + eps z N_k x exactly.
  virtual bool linear_nilpotent_noise() const { return false; }
};

enum class ExitFlag { None, CriticalPoint, Explosion };

const char* to_string(ExitFlag flag);

struct TrajectoryState {
  double t = 0.0;
  Vec2 x;
  bool has_tangent = false;
  Vec2 v;
  ExitFlag exit = ExitFlag::None;
};

struct StepperConfig {
  double dt = 1e-3;
  std::size_t flow_substeps = 8;
  double tol_crit = 1e-6;
  double bound_explode = 1e8;
  std::size_t compensator_quadrature_nodes = 32;

  void validate() const;
};

class ExitDetected : public Error {
 public:
  ExitDetected(ExitFlag flag, double time, const Vec2& x);
  ExitFlag flag() const noexcept { return flag_; }
  double time() const noexcept { return time_; }
  Vec2 position() const noexcept { return x_; }

 private:
  ExitFlag flag_;
  double time_;
  Vec2 x_;
};

ExitFlag classify_position(const VectorFieldSet& fields, const Vec2& x, const StepperConfig& cfg);

struct JumpFlow {
  Vec2 x;
  Mat2 jacobian = Mat2::identity();
};

// Time-one flow of eps * sum_k z_k V_k from x, classical fourth-order
// Runge-Kutta with `substeps` equal steps; the variational equation is carried
// along when with_jacobian is set. Throws FlowEscape if the flow leaves the
// domain.
JumpFlow marcus_jump_flow(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                          std::size_t substeps, bool with_jacobian, double tol_crit = 0.0);

// As marcus_jump_flow, but a single-component jump of a linear nilpotent
// field set is applied in closed form.
JumpFlow apply_marcus_jump(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                           std::size_t substeps, bool with_jacobian, double tol_crit = 0.0);

Vec2 marcus_jump_map(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                     std::size_t substeps = 8);
Mat2 marcus_jump_jacobian(const VectorFieldSet& fields, double eps, const Marks& z, const Vec2& x,
                          std::size_t substeps = 8);

// int [xi(z)(x) - x - eps sum_k z_k V_k(x)] nu(dz), nu acting independently on
// each axis, over the measure's [floor, cutoff) region.
Vec2 compensator_drift(const VectorFieldSet& fields, double eps, const JumpMeasureSpec& measure,
                       const Vec2& x, std::size_t nodes_per_sign = 32, std::size_t substeps = 8);

// One interlaced step: the drift U1 + (q eps^2 / 2) sum_k DV_k V_k by RK4, then
// the Euler-Maruyama Brownian term, then the jumps in offset order. q is the
// continuous variance rate of the noise. The nu-compensator drift and the
// compensation of the small-jump integral cancel for a symmetric nu, so raw
// jumps are applied and no compensator is evaluated.
class MarcusStepper {
 public:
  MarcusStepper(const VectorFieldSet& fields, double eps, const NoiseModel& noise,
                const StepperConfig& cfg);

  // Throws ExitDetected when the post-step state leaves the domain.
  void step(TrajectoryState& state, const IncrementBatch& batch) const;

  // Drift and Brownian parts only; no exit check.
  void continuous_step(TrajectoryState& state, const IncrementBatch& batch) const;
  void apply_jump(TrajectoryState& state, const Marks& z) const;
  double epsilon() const { return eps_; }
  const StepperConfig& config() const { return cfg_; }

 private:
  void drift_step(TrajectoryState& state, double h) const;

  const VectorFieldSet& fields_;
  double eps_;
  double correction_;  // q eps^2 / 2
  std::size_t dim_;
  StepperConfig cfg_;
};

void step(const VectorFieldSet& fields, double eps, const NoiseModel& noise, TrajectoryState& state,
          const IncrementBatch& batch, const StepperConfig& cfg);

struct TrajectorySummary {
  TrajectoryState final_state;
  std::uint64_t steps = 0;
  std::uint64_t jumps = 0;
};

using StepObserver = std::function<void(const TrajectoryState&)>;

// Steps from x0 until t reaches horizon (rounded up to whole steps). The
// observer, if set, sees the initial state and every post-step state.
// Throws ExitDetected, with the exit time, if the path leaves the domain.
TrajectorySummary integrate(const VectorFieldSet& fields, double eps, const NoiseModel& noise,
                            const Vec2& x0, double horizon, const StepperConfig& cfg, Stream& rng,
                            const StepObserver& observer = {}, const Vec2* v0 = nullptr);

}  // namespace levyap
