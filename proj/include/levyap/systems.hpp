#pragma once

#include <memory>
#include <string>

#include "levyap/frame.hpp"

namespace levyap {

// du = [[0, a], [0, 0]] u dt + eps [[0, 0], [sigma, 0]] u <> dL, H = a u2^2 / 2.
// The system is already linear, so its own coordinates serve as the frame:
// A = a, D = sigma, B = C = E = 0. The domain is |u| >= tol_crit.
class NilpotentSystem final : public SystemModel {
 public:
  NilpotentSystem(double a, double sigma);

  double a() const { return a_; }
  double sigma() const { return sigma_; }

  std::string name() const override { return "nilpotent"; }
  bool homogeneous() const override { return true; }
  std::size_t dimension() const override { return 1; }

  double H(const Vec2& u) const override { return 0.5 * a_ * u.y * u.y; }
  Vec2 grad_H(const Vec2& u) const override { return {0.0, a_ * u.y}; }
  Mat2 hess_H(const Vec2&) const override { return {0.0, 0.0, 0.0, a_}; }

  Vec2 field(std::size_t, const Vec2& u) const override { return {0.0, sigma_ * u.x}; }
  Mat2 field_jacobian(std::size_t, const Vec2&) const override { return {0.0, 0.0, sigma_, 0.0}; }
  Mat2 correction_jacobian(std::size_t, const Vec2&) const override { return Mat2::zero(); }
  bool linear_nilpotent_noise() const override { return true; }
  double domain_margin(const Vec2& u) const override { return norm(u); }

  // Components of V in the Lemma 3.1 frame of H (valid where u2 != 0).
  double a1(std::size_t, const Vec2&) const override { return 0.0; }
  double a2(std::size_t, const Vec2& u) const override { return sigma_ * a_ * u.x * u.y; }
  Vec2 grad_a1(std::size_t, const Vec2&) const override { return {}; }
  Vec2 grad_a2(std::size_t, const Vec2& u) const override {
    return {sigma_ * a_ * u.y, sigma_ * a_ * u.x};
  }

  FrameCoefficients coefficients(const Vec2& u) const override;
  Vec2 to_frame(const Vec2&, const Vec2& v) const override { return v; }
  Vec2 from_frame(const Vec2&, const Vec2& w) const override { return w; }
  bool constant_coefficients() const override { return true; }
  double frame_shear(std::size_t) const override { return sigma_; }

 private:
  double a_;
  double sigma_;
};

// x'' = -x - x^3 + eps sigma x <> dL, in phase space (x, y):
// H = x^2/2 + x^4/4 + y^2/2, V = (0, sigma x).
class DuffingSystem final : public SystemModel {
 public:
  explicit DuffingSystem(double sigma);

  double sigma() const { return sigma_; }

  std::string name() const override { return "duffing"; }
  std::size_t dimension() const override { return 1; }

  double H(const Vec2& p) const override;
  Vec2 grad_H(const Vec2& p) const override;
  Mat2 hess_H(const Vec2& p) const override;

  Vec2 field(std::size_t, const Vec2& p) const override { return {0.0, sigma_ * p.x}; }
  Mat2 field_jacobian(std::size_t, const Vec2&) const override { return {0.0, 0.0, sigma_, 0.0}; }
  Mat2 correction_jacobian(std::size_t, const Vec2&) const override { return Mat2::zero(); }
  bool linear_nilpotent_noise() const override { return true; }

  // a1 = -sigma x (x + x^3) / G, a2 = sigma x y, G = (x + x^3)^2 + y^2.
  double a1(std::size_t, const Vec2& p) const override;
  double a2(std::size_t, const Vec2& p) const override { return sigma_ * p.x * p.y; }
  Vec2 grad_a1(std::size_t, const Vec2& p) const override;
  Vec2 grad_a2(std::size_t, const Vec2& p) const override { return {sigma_ * p.y, sigma_ * p.x}; }

  // The same component written with an explicit eps factor, as it is often
  // displayed for the eps-scaled field.
  double a1_scaled_display(const Vec2& p, double eps) const { return eps * a1(0, p); }

 private:
  double sigma_;
};

std::unique_ptr<NilpotentSystem> make_nilpotent(double a, double sigma);
std::unique_ptr<DuffingSystem> make_duffing(double sigma);
// By name: "nilpotent" (uses a and sigma) or "duffing" (uses sigma).
std::unique_ptr<SystemModel> make_system(const std::string& name, double a, double sigma);

// Closed-form jump of the nilpotent angle under the shear w2 += k w1 of the
// rescaled frame coordinates, k = eps^(1-beta) sigma z (k = eps sigma z without
// rescaling). Globally defined through the two-argument arctangent.
double exact_theta_jump(double theta, double k);
// 1/2 log((1 + (tan theta + k)^2) / (1 + tan^2 theta)) = 1/2 log1p(2 k s c + k^2 c^2).
double exact_rho_jump(double theta, double k);

}  // namespace levyap
