#pragma once

// Moving-frame linearisation of a perturbed one-degree-of-freedom Hamiltonian
// system. The tangent v is written v = w1 U1 + w2 U2 with U1 = (dH/dy, -dH/dx)
// and U2 = grad H / |grad H|^2. In these coordinates the linearisation is a
// perturbed nilpotent system
//   dw = [[0, A], [0, 0]] w dt + eps sum_k [[B_k, C_k], [D_k, E_k]] w <> dL^k.
// The polar form (theta, rho) of the rescaled (eps^beta w1, w2) carries the
// exponential growth rate.

#include <array>
#include <cstddef>
#include <string>

#include "levyap/core.hpp"
#include "levyap/marcus.hpp"
#include "levyap/noise.hpp"

namespace levyap {

class HamiltonianModel {
 public:
  virtual ~HamiltonianModel() = default;
  virtual double H(const Vec2& x) const = 0;
  virtual Vec2 grad_H(const Vec2& x) const = 0;
  virtual Mat2 hess_H(const Vec2& x) const = 0;
  virtual double tol_crit() const { return 1e-6; }
};

// Frame components V_k = a1_k U1 + a2_k U2 of the (unscaled) noise fields.
class PerturbationFields {
 public:
  virtual ~PerturbationFields() = default;
  virtual std::size_t dimension() const = 0;
  virtual double a1(std::size_t k, const Vec2& x) const = 0;
  virtual double a2(std::size_t k, const Vec2& x) const = 0;
  // Central differences with h = 1e-6 (1 + |x|) unless overridden.
  virtual Vec2 grad_a1(std::size_t k, const Vec2& x) const;
  virtual Vec2 grad_a2(std::size_t k, const Vec2& x) const;
};

struct FrameCoefficients {
  std::size_t dimension = 1;
  double A = 0.0;
  Marks B{}, C{}, D{}, E{};
};

struct FramePair {
  Vec2 u1;
  Vec2 u2;
};

// All of these throw CriticalPoint when |grad H(x)| < tol_crit.
FramePair frame_vectors(const HamiltonianModel& model, const Vec2& x);
// A such that DU1 U2 - DU2 U1 = A U1:
//   A = [((H_y)^2 - (H_x)^2)(H_yy - H_xx) + 4 H_x H_y H_xy] / |grad H|^4.
double coefficient_A(const HamiltonianModel& model, const Vec2& x);
// B = U1.a1 - A a2, C = U2.a1 + A a1, D = U1.a2, E = U2.a2.
FrameCoefficients frame_coefficients(const HamiltonianModel& model, const PerturbationFields& fields,
                                     const Vec2& x);
// w2 = <v, grad H>, w1 = <v, U1> / |grad H|^2.
Vec2 decompose_tangent(const HamiltonianModel& model, const Vec2& x, const Vec2& v);
Vec2 recompose_tangent(const HamiltonianModel& model, const Vec2& x, const Vec2& w);

struct PWTransform {
  double epsilon = 0.1;
  double beta = 2.0 / 3.0;
};

// T w = (eps^beta w1, w2).
Vec2 pw_scale(const Vec2& w, const PWTransform& t);

// Noise coefficients of (theta, rho) for each component:
//   sigma1 = eps^(1-b) Q1 + eps Q2 + eps^(1+b) Q3,
//   sigma2 = eps^(1-b) P1 + eps P2 + eps^(1+b) P3,
// and the Wong-Zakai terms sigma~ = eps (V_k . sigma) + d_theta(sigma) sigma1,
// graded as sum_j eps^(2 - 2b + j b) Qt[j] (and Pt[j]), j = 0..4.
struct GradedTerms {
  std::size_t dimension = 1;
  std::array<std::array<double, 3>, kMaxDrivers> Q{}, P{};
  std::array<std::array<double, 5>, kMaxDrivers> Qt{}, Pt{};
  Marks sigma1{}, sigma2{}, sigma1_tilde{}, sigma2_tilde{};
};

using FieldDerivatives = std::array<FrameCoefficients, kMaxDrivers>;

// Powers of eps used by the graded sums, computed once per (eps, beta).
struct GradeScales {
  double eps = 0.0;
  double lo = 0.0;  // eps^(1-b)
  double hi = 0.0;  // eps^(1+b)
  std::array<double, 5> wz{};  // eps^(2-2b+jb)
};

GradeScales grade_scales(double eps, double beta);
GradedTerms graded_terms(const FrameCoefficients& coeffs, double theta, const GradeScales& scales,
                         const FieldDerivatives* along = nullptr);

// `along[k]` holds the derivatives of the coefficients in the direction of
// V_k; nullptr means the coefficients are constant in x.
GradedTerms graded_terms(const FrameCoefficients& coeffs, double theta, double eps, double beta,
                         const FieldDerivatives* along = nullptr);

// A Hamiltonian system bundled with its noise fields and frame data.
class SystemModel : public VectorFieldSet, public HamiltonianModel, public PerturbationFields {
 public:
  virtual std::string name() const = 0;
  // Number of driving components; overrides both bases.
  std::size_t dimension() const override = 0;
  // Linear systems may be rescaled in x without changing tangent dynamics.
  virtual bool homogeneous() const { return false; }

  // U1 and its Jacobian from H.
  Vec2 drift(const Vec2& x) const override;
  Mat2 drift_jacobian(const Vec2& x) const override;
  double domain_margin(const Vec2& x) const override { return norm(grad_H(x)); }

  // Frame data. Default: the Lemma 3.1 frame of H.
  virtual FrameCoefficients coefficients(const Vec2& x) const;
  virtual Vec2 to_frame(const Vec2& x, const Vec2& v) const;
  virtual Vec2 from_frame(const Vec2& x, const Vec2& w) const;
  // Derivatives of every coefficient in the direction of V_k.
  virtual FrameCoefficients coefficients_along_field(std::size_t k, const Vec2& x) const;
  virtual bool constant_coefficients() const { return false; }
  // When a jump z e_k acts on frame coordinates as w2 += eps z s w1 for a
  // constant s, returns s; otherwise NaN.
  virtual double frame_shear(std::size_t k) const;
};

// Result of a jump on (x, theta, rho): the moved base point, the new angle in
// [0, 2pi) and the increment of rho.
struct AngularJump {
  Vec2 x;
  double theta = 0.0;
  double rho = 0.0;
};

// Exact: transports the tangent direction through the jump Jacobian.
AngularJump angular_jump(const SystemModel& system, const Vec2& x, double theta, const Marks& z,
                         double eps, double beta, std::size_t substeps = 8);
// Integrates the lifted flow d(xi, zeta1, zeta2)/dtau = (eps V, sigma1, sigma2) . z
// by RK4 with the given number of substeps.
AngularJump angular_jump_flow(const SystemModel& system, const Vec2& x, double theta,
                              const Marks& z, double eps, double beta, std::size_t substeps = 64);

// Precomputed nu-quadrature for the compensator integral
//   I_rho(x, theta) = int [zeta2(z)(x, theta) - sum_k z_k sigma2_k(x, theta)] nu(dz),
// nu acting independently on each axis over [floor, cutoff).
class IrhoEvaluator {
 public:
  IrhoEvaluator(const SystemModel& system, const JumpMeasureSpec& measure, double eps, double beta,
                std::size_t nodes_per_sign = 32, std::size_t substeps = 8);
  double operator()(const Vec2& x, double theta) const;

 private:
  const SystemModel& system_;
  double eps_, beta_;
  std::size_t substeps_;
  std::size_t dim_;
  JumpQuadrature quad_;
  std::array<std::vector<double>, kMaxDrivers> shear_marks_;  // empty when no closed form
};

double compute_Irho(const SystemModel& system, const JumpMeasureSpec& measure, const Vec2& x,
                    double theta, double eps, double beta, std::size_t nodes_per_sign = 32);

struct R0Options {
  double beta = 2.0 / 3.0;
  std::size_t z_nodes = 32;   // per sign
  std::size_t ab_nodes = 8;   // per axis of the inner triangle
  bool check_convergence = true;
  double tolerance = 1e-4;
};

// int nu(dz) int_0^1 int_0^a (sum_k z_k D_k(xi(bz)))^2 cos^2(zeta)(cos^2(zeta) - sin^2(zeta)) db da,
// zeta = zeta1(bz)(x, theta). Throws QuadratureFailure when doubling the
// z-node count moves the value by more than the relative tolerance.
double compute_R0(const SystemModel& system, const JumpMeasureSpec& measure, const Vec2& x,
                  double theta, double eps, const R0Options& opts = {});

struct Sigma0Options {
  R0Options r0;
  // Replace the R0 term by eps^(-2(1-beta)) I_rho.
  bool irho_fallback = false;
};

// A sin cos + q sum_k D_k^2 (cos^2/2 - sin^2 cos^2) + jump term, with q the
// continuous variance rate of the noise.
double sigma0(const SystemModel& system, const NoiseModel& noise, const Vec2& x, double theta,
              double eps, const Sigma0Options& opts = {});

}  // namespace levyap
