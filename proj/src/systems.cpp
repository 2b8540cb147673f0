#include "levyap/systems.hpp"

#include <cmath>

namespace levyap {

NilpotentSystem::NilpotentSystem(double a, double sigma) : a_(a), sigma_(sigma) {
  require(a > 0.0 && std::isfinite(a), ErrorKind::InvalidParameter, "nilpotent system needs a > 0");
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::InvalidParameter,
          "nilpotent system needs sigma > 0");
}

FrameCoefficients NilpotentSystem::coefficients(const Vec2&) const {
  FrameCoefficients f;
  f.dimension = 1;
  f.A = a_;
  f.D[0] = sigma_;
  return f;
}

DuffingSystem::DuffingSystem(double sigma) : sigma_(sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::InvalidParameter,
          "Duffing system needs sigma > 0");
}

double DuffingSystem::H(const Vec2& p) const {
  const double x2 = p.x * p.x;
  return 0.5 * x2 + 0.25 * x2 * x2 + 0.5 * p.y * p.y;
}

Vec2 DuffingSystem::grad_H(const Vec2& p) const { return {p.x + p.x * p.x * p.x, p.y}; }

Mat2 DuffingSystem::hess_H(const Vec2& p) const { return {1.0 + 3.0 * p.x * p.x, 0.0, 0.0, 1.0}; }

double DuffingSystem::a1(std::size_t, const Vec2& p) const {
  const double q = p.x + p.x * p.x * p.x;
  const double g = q * q + p.y * p.y;
  return -sigma_ * p.x * q / g;
}

Vec2 DuffingSystem::grad_a1(std::size_t, const Vec2& p) const {
  const double x = p.x, y = p.y;
  const double q = x + x * x * x;
  const double dq = 1.0 + 3.0 * x * x;
  const double g = q * q + y * y;
  const double num = x * q;
  const double dnum = q + x * dq;
  const double dx = -sigma_ * (dnum * g - num * 2.0 * q * dq) / (g * g);
  const double dy = sigma_ * num * 2.0 * y / (g * g);
  return {dx, dy};
}

std::unique_ptr<NilpotentSystem> make_nilpotent(double a, double sigma) {
  return std::make_unique<NilpotentSystem>(a, sigma);
}

std::unique_ptr<DuffingSystem> make_duffing(double sigma) {
  return std::make_unique<DuffingSystem>(sigma);
}

std::unique_ptr<SystemModel> make_system(const std::string& name, double a, double sigma) {
  if (name == "nilpotent") return make_nilpotent(a, sigma);
  if (name == "duffing") return make_duffing(sigma);
  fail(ErrorKind::InvalidParameter, "unknown system '" + name + "' (expected nilpotent|duffing)");
}

double exact_theta_jump(double theta, double k) {
  const double c = std::cos(theta), s = std::sin(theta);
  return wrap_angle(std::atan2(s + k * c, c));
}

double exact_rho_jump(double theta, double k) {
  const double c = std::cos(theta), s = std::sin(theta);
  return 0.5 * std::log1p(2.0 * k * s * c + k * k * c * c);
}

}  // namespace levyap
