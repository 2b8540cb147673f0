#pragma once

// Driving Levy noise: Brownian part plus compound-Poisson jumps of a symmetric
// alpha-stable measure truncated to floor <= |z| < cutoff, sampled
// componentwise.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "levyap/core.hpp"
#include "levyap/rng.hpp"
#include "levyap/simd.hpp"

namespace levyap {

// nu(dz) = c_alpha |z|^(-1-alpha) dz per driving component, restricted to
// floor <= |z| < cutoff. c_alpha = 0 switches jumps off.
struct JumpMeasureSpec {
  double alpha = 1.5;
  double c_alpha = 1.0;
  double cutoff = 1.0;
  double floor = 1e-3;
  std::size_t dimension = 1;

  void validate() const;
  bool has_mass() const { return c_alpha > 0.0; }
  // Expected jumps per unit time per component over [floor, cutoff).
  double intensity() const;
  simd::PowerLawParams power_law() const;
};

enum class SmallJumps {
  Drop,      // jumps below floor are discarded
  Gaussian,  // replaced by a Brownian increment of matching variance
};

struct NoiseModel {
  bool brownian = true;
  JumpMeasureSpec measure;
  SmallJumps small_jumps = SmallJumps::Drop;

  std::size_t dimension() const { return measure.dimension; }
  bool has_jumps() const { return measure.has_mass(); }
  // Variance rate of the continuous driver: 1 for Brownian motion plus the
  // second moment of the discarded small jumps in Gaussian mode.
  double continuous_variance() const;
  void validate() const;
};

struct Jump {
  double offset = 0.0;  // within [0, dt)
  std::uint32_t component = 0;
  double mark = 0.0;
};

struct IncrementBatch {
  double dt = 0.0;
  std::size_t dimension = 1;
  std::array<double, kMaxDrivers> brownian{};
  std::vector<Jump> jumps;  // sorted by offset; empty when aggregated
  // Aggregated form: only the per-component sum and count of the marks.
  // With a single driving component the jumps of one step commute, and the
  // composition of their Marcus maps is the map of the summed mark.
  bool aggregated = false;
  std::array<double, kMaxDrivers> mark_sum{};
  std::size_t jump_count = 0;
};

// Independent N(0, dt) components.
std::vector<double> sample_brownian(std::size_t dim, double dt, Stream& rng);

// Jumps of every component over one step of length dt, merged in offset order.
// Throws InvalidMeasure when floor = 0 (infinite activity).
std::vector<Jump> sample_jumps(const JumpMeasureSpec& measure, double dt, Stream& rng);

// int_{lo <= |z| < hi} |z|^p nu(dz). Throws DivergentMoment when infinite.
double jump_moment(const JumpMeasureSpec& measure, double p, double lo, double hi);

// int z nu(dz) over the (symmetric) truncation region. Always zero.
inline constexpr double jump_mean(const JumpMeasureSpec&) { return 0.0; }

// Quadrature against nu on lo <= |z| < hi using positive nodes only:
//   int f(z) nu(dz) ~= sum_q weights[q] * (f(marks[q]) + f(-marks[q])).
// Exact for f = z^2. lo > 0 uses a logarithmic map of [lo, hi]; lo = 0 uses
// z = hi t^(1/(2-alpha)), under which z^2 nu(dz) is uniform in t.
struct JumpQuadrature {
  std::vector<double> marks;
  std::vector<double> weights;

  std::size_t size() const { return marks.size(); }
};

JumpQuadrature jump_quadrature(const JumpMeasureSpec& measure, std::size_t nodes_per_sign, double lo,
                               double hi);
// Over the simulated region [floor, cutoff).
JumpQuadrature jump_quadrature(const JumpMeasureSpec& measure, std::size_t nodes_per_sign);

// Reusable per-trajectory sampler; owns its distributions and scratch space.
class IncrementSampler {
 public:
  // aggregate = true requests the aggregated batch form; it is honoured only
  // for a single driving component.
  IncrementSampler(const NoiseModel& noise, double dt, bool aggregate = false);

  void sample(Stream& rng, IncrementBatch& out);
  double dt() const { return dt_; }
  bool aggregated() const { return aggregate_; }

 private:
  NoiseModel noise_;
  double dt_;
  bool aggregate_;
  double brownian_scale_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::poisson_distribution<std::int64_t> poisson_;
  simd::PowerLawParams power_law_{};
  std::vector<std::uint64_t> bits_;
  std::vector<double> marks_;
  std::vector<double> spacings_;
};

}  // namespace levyap
