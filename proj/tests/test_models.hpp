#pragma once

// Small systems used only by the tests.

#include <cmath>

#include "levyap/frame.hpp"
#include "levyap/marcus.hpp"

namespace levyap::testing {

// H = |x|^2 / 2 with no noise fields at all: every frame coefficient
// vanishes, and so does every drift term of the angle-radius equations.
class QuietOscillator final : public SystemModel {
 public:
  std::string name() const override { return "quiet"; }
  std::size_t dimension() const override { return 1; }
  double H(const Vec2& x) const override { return 0.5 * dot(x, x); }
  Vec2 grad_H(const Vec2& x) const override { return x; }
  Mat2 hess_H(const Vec2&) const override { return Mat2::identity(); }
  Vec2 field(std::size_t, const Vec2&) const override { return {}; }
  Mat2 field_jacobian(std::size_t, const Vec2&) const override { return Mat2::zero(); }
  double a1(std::size_t, const Vec2&) const override { return 0.0; }
  double a2(std::size_t, const Vec2&) const override { return 0.0; }
};

// A nonlinear divergence-free noise field V = (sin y, x^2) with a pendulum
// drift, for flow properties that the linear systems satisfy trivially.
class SwirlFields final : public VectorFieldSet {
 public:
  std::size_t dimension() const override { return 1; }
  Vec2 drift(const Vec2& x) const override { return {x.y, -std::sin(x.x)}; }
  Mat2 drift_jacobian(const Vec2& x) const override { return {0.0, 1.0, -std::cos(x.x), 0.0}; }
  Vec2 field(std::size_t, const Vec2& x) const override { return {std::sin(x.y), x.x * x.x}; }
  Mat2 field_jacobian(std::size_t, const Vec2& x) const override {
    return {0.0, std::cos(x.y), 2.0 * x.x, 0.0};
  }
  double domain_margin(const Vec2&) const override { return 1.0; }
};

}  // namespace levyap::testing
