#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

#include "levyap/frame.hpp"
#include "levyap/rng.hpp"
#include "levyap/systems.hpp"
#include "test_models.hpp"

using namespace levyap;

namespace {

double uniform(Stream& rng, double lo, double hi) { return lo + (hi - lo) * unit_from_bits(rng()); }

// Random point of the Duffing phase plane away from the origin.
Vec2 duffing_point(Stream& rng) {
  for (;;) {
    const Vec2 p{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
    if (norm(p) > 0.1) return p;
  }
}

double duffing_G(const Vec2& p) {
  const double g = p.x + p.x * p.x * p.x;
  return g * g + p.y * p.y;
}

}  // namespace

TEST_CASE("frame vectors") {
  const auto duff = make_duffing(1.0);
  const FramePair f = frame_vectors(*duff, {1.0, 0.0});
  CHECK(f.u1.x == doctest::Approx(0.0));
  CHECK(f.u1.y == doctest::Approx(-2.0));
  CHECK(f.u2.x == doctest::Approx(0.5));
  CHECK(f.u2.y == doctest::Approx(0.0));

  const auto nil = make_nilpotent(2.0, 1.0);
  const FramePair g = frame_vectors(*nil, {1.0, 1.0});
  CHECK(g.u1.x == doctest::Approx(2.0));
  CHECK(g.u1.y == doctest::Approx(0.0));
  CHECK(g.u2.x == doctest::Approx(0.0));
  CHECK(g.u2.y == doctest::Approx(0.5));

  Stream rng = make_stream(2, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = duffing_point(rng);
    const FramePair h = frame_vectors(*duff, p);
    const Vec2 gh = duff->grad_H(p);
    CHECK(std::abs(dot(h.u1, gh)) <= 1e-10 * dot(gh, gh));
    CHECK(dot(h.u2, gh) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(dot(h.u1, h.u2)) < 1e-12);
  }
  CHECK_THROWS_AS(frame_vectors(*duff, {0.0, 0.0}), Error);
}

TEST_CASE("coefficient A") {
  // The frame built from H = a u2^2 / 2 itself gives A = 1 / (a u2^2); the
  // system's own linear coordinates carry the constant drift coefficient a.
  const auto nil = make_nilpotent(1.7, 1.0);
  CHECK(coefficient_A(*nil, {0.3, 0.8}) == doctest::Approx(1.0 / (1.7 * 0.64)).epsilon(1e-14));
  CHECK(nil->coefficients({0.3, 0.8}).A == 1.7);

  const auto duff = make_duffing(1.0);
  CHECK(coefficient_A(*duff, {1.0, 0.0}) == doctest::Approx(0.75).epsilon(1e-14));

  const testing::QuietOscillator ho;
  CHECK(coefficient_A(ho, {0.3, -1.2}) == 0.0);

  Stream rng = make_stream(3, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = duffing_point(rng);
    const double g = p.x + p.x * p.x * p.x;
    const double expect = 3.0 * p.x * p.x * (g * g - p.y * p.y) / (duffing_G(p) * duffing_G(p));
    CHECK(coefficient_A(*duff, p) == doctest::Approx(expect).epsilon(1e-8).scale(1.0));

    // Finite-difference Hessian in the same formula.
    const double h = 1e-5;
    const Vec2 gx = (1.0 / (2 * h)) * (duff->grad_H({p.x + h, p.y}) - duff->grad_H({p.x - h, p.y}));
    const Vec2 gy = (1.0 / (2 * h)) * (duff->grad_H({p.x, p.y + h}) - duff->grad_H({p.x, p.y - h}));
    const Vec2 d = duff->grad_H(p);
    const double n2 = dot(d, d);
    const double fd = ((d.y * d.y - d.x * d.x) * (gy.y - gx.x) + 4.0 * d.x * d.y * gx.y) / (n2 * n2);
    CHECK(coefficient_A(*duff, p) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("frame coefficients of the shipped systems") {
  const auto nil = make_nilpotent(1.3, 0.6);
  const FrameCoefficients c = nil->coefficients({0.5, 0.2});
  CHECK(c.A == 1.3);
  CHECK(c.D[0] == 0.6);
  CHECK(c.B[0] == 0.0);
  CHECK(c.C[0] == 0.0);
  CHECK(c.E[0] == 0.0);

  const double sigma = 0.8;
  const auto duff = make_duffing(sigma);
  CHECK(frame_coefficients(*duff, *duff, {1.0, 0.0}).D[0] == doctest::Approx(-2.0 * sigma));
  Stream rng = make_stream(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = duffing_point(rng);
    const FrameCoefficients f = duff->coefficients(p);
    const double g = p.x + p.x * p.x * p.x, G = duffing_G(p);
    CHECK(f.B[0] + f.E[0] == doctest::Approx(0.0).scale(std::abs(f.B[0]) + 1.0).epsilon(1e-8));
    CHECK(f.B[0] == doctest::Approx(-sigma * p.x * p.y * (p.x * p.x + 2.0) / G).epsilon(1e-8).scale(1.0));
    CHECK(f.C[0] == doctest::Approx(-sigma * p.x * p.x * p.x * g / (G * G)).epsilon(1e-8).scale(1.0));
    CHECK(f.D[0] == doctest::Approx(-sigma * p.x * g + sigma * p.y * p.y).epsilon(1e-8).scale(1.0));
    CHECK(f.A == doctest::Approx(3.0 * p.x * p.x * (g * g - p.y * p.y) / (G * G)).epsilon(1e-8).scale(1.0));

    // V = a1 U1 + a2 U2 reproduces (0, sigma x).
    const FramePair fr = frame_vectors(*duff, p);
    const Vec2 v = duff->a1(0, p) * fr.u1 + duff->a2(0, p) * fr.u2;
    CHECK(std::abs(v.x) <= 1e-8 * (1.0 + std::abs(sigma * p.x)));
    CHECK(v.y == doctest::Approx(sigma * p.x).epsilon(1e-8).scale(1.0));
    CHECK(duff->a1_scaled_display(p, 0.1) == doctest::Approx(0.1 * duff->a1(0, p)));
  }

  const testing::QuietOscillator quiet;
  const FrameCoefficients z = frame_coefficients(quiet, quiet, {0.3, 0.4});
  CHECK(z.B[0] == 0.0);
  CHECK(z.C[0] == 0.0);
  CHECK(z.D[0] == 0.0);
  CHECK(z.E[0] == 0.0);
}

TEST_CASE("tangent decomposition") {
  const auto duff = make_duffing(1.0);
  const Vec2 w = decompose_tangent(*duff, {1.0, 0.0}, {1.0, 1.0});
  CHECK(w.x == doctest::Approx(-0.5));
  CHECK(w.y == doctest::Approx(2.0));
  const Vec2 v = recompose_tangent(*duff, {1.0, 0.0}, w);
  CHECK(v.x == doctest::Approx(1.0));
  CHECK(v.y == doctest::Approx(1.0));
  const Vec2 u1 = frame_vectors(*duff, {0.3, 0.7}).u1;
  const Vec2 e = decompose_tangent(*duff, {0.3, 0.7}, u1);
  CHECK(e.x == doctest::Approx(1.0));
  CHECK(e.y == doctest::Approx(0.0).scale(1.0));
  const Vec2 zero = decompose_tangent(*duff, {0.3, 0.7}, {0.0, 0.0});
  CHECK(zero.x == 0.0);
  CHECK(zero.y == 0.0);

  Stream rng = make_stream(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = duffing_point(rng);
    const Vec2 t{uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const Vec2 back = recompose_tangent(*duff, p, decompose_tangent(*duff, p, t));
    CHECK(norm(back - t) <= 1e-12 * norm(t));
  }
}

TEST_CASE("graded noise terms") {
  FrameCoefficients c;
  c.A = 0.7;
  c.B[0] = 0.3;
  c.C[0] = -1.1;
  c.D[0] = 0.9;
  c.E[0] = -0.4;
  const double beta = 2.0 / 3.0;
  for (double eps : {0.01, 0.1, 0.5}) {
    const double lo = std::pow(eps, 1 - beta), hi = std::pow(eps, 1 + beta);
    const GradedTerms t0 = graded_terms(c, 0.0, eps, beta);
    CHECK(t0.sigma1[0] == doctest::Approx(lo * 0.9).epsilon(1e-14));
    CHECK(t0.sigma2[0] == doctest::Approx(eps * 0.3).epsilon(1e-14));
    const GradedTerms t1 = graded_terms(c, kPi / 2, eps, beta);
    CHECK(t1.sigma1[0] == doctest::Approx(-hi * -1.1).epsilon(1e-12));
    CHECK(t1.sigma2[0] == doctest::Approx(eps * -0.4).epsilon(1e-12));

    for (double th : {0.2, 1.0, 2.5, 4.4}) {
      const GradedTerms t = graded_terms(c, th, eps, beta);
      const double s = std::sin(th), co = std::cos(th);
      CHECK(t.Q[0][0] == doctest::Approx(0.9 * co * co));
      CHECK(t.Q[0][1] == doctest::Approx(-(0.3 + 0.4) * s * co));
      CHECK(t.Q[0][2] == doctest::Approx(1.1 * s * s));
      CHECK(t.P[0][0] == doctest::Approx(0.9 * s * co));
      CHECK(t.P[0][1] == doctest::Approx(0.3 * co * co - 0.4 * s * s));
      CHECK(t.P[0][2] == doctest::Approx(-1.1 * s * co));
      CHECK(t.sigma1[0] == doctest::Approx(lo * t.Q[0][0] + eps * t.Q[0][1] + hi * t.Q[0][2]).epsilon(1e-15));
      CHECK(t.sigma2[0] == doctest::Approx(lo * t.P[0][0] + eps * t.P[0][1] + hi * t.P[0][2]).epsilon(1e-15));
      // Brownian leading term: half of the lowest grade of sigma2~.
      CHECK(0.5 * t.Pt[0][0] == doctest::Approx(0.81 * (0.5 * co * co - s * s * co * co)).epsilon(1e-13));
      double q = 0.0, p = 0.0;
      for (int j = 0; j < 5; ++j) {
        q += std::pow(eps, 2 - 2 * beta + j * beta) * t.Qt[0][j];
        p += std::pow(eps, 2 - 2 * beta + j * beta) * t.Pt[0][j];
      }
      CHECK(t.sigma1_tilde[0] == doctest::Approx(q).epsilon(1e-12));
      CHECK(t.sigma2_tilde[0] == doctest::Approx(p).epsilon(1e-12));
      // With constant coefficients, sigma~ = d_theta(sigma) sigma1.
      const double h = 1e-6;
      const double d1 = (graded_terms(c, th + h, eps, beta).sigma1[0] - graded_terms(c, th - h, eps, beta).sigma1[0]) / (2 * h);
      const double d2 = (graded_terms(c, th + h, eps, beta).sigma2[0] - graded_terms(c, th - h, eps, beta).sigma2[0]) / (2 * h);
      CHECK(t.sigma1_tilde[0] == doctest::Approx(d1 * t.sigma1[0]).epsilon(1e-6).scale(1e-3));
      CHECK(t.sigma2_tilde[0] == doctest::Approx(d2 * t.sigma1[0]).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("Wong-Zakai terms with position-dependent coefficients") {
  // sigma~ = eps D_x(sigma) V + d_theta(sigma) sigma1, by finite differences.
  const auto duff = make_duffing(0.7);
  const double eps = 0.2, beta = 2.0 / 3.0;
  Stream rng = make_stream(6, 0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p = duffing_point(rng);
    const double th = uniform(rng, 0.0, kTwoPi);
    FieldDerivatives along{};
    along[0] = duff->coefficients_along_field(0, p);
    const GradedTerms t = graded_terms(duff->coefficients(p), th, eps, beta, &along);
    auto sig = [&](const Vec2& x, double a) { return graded_terms(duff->coefficients(x), a, eps, beta); };
    const double h = 1e-5;
    const Vec2 v = duff->field(0, p);
    const GradedTerms xp = sig(p + h * v, th), xm = sig(p - h * v, th);
    const GradedTerms tp = sig(p, th + h), tm = sig(p, th - h);
    const double s1 = eps * (xp.sigma1[0] - xm.sigma1[0]) / (2 * h) + (tp.sigma1[0] - tm.sigma1[0]) / (2 * h) * t.sigma1[0];
    const double s2 = eps * (xp.sigma2[0] - xm.sigma2[0]) / (2 * h) + (tp.sigma2[0] - tm.sigma2[0]) / (2 * h) * t.sigma1[0];
    const double scale = 1e-3 * (1.0 + std::abs(s1) + std::abs(s2));
    CHECK(std::abs(t.sigma1_tilde[0] - s1) < scale);
    CHECK(std::abs(t.sigma2_tilde[0] - s2) < scale);
  }
}

TEST_CASE("rescaling transform") {
  const Vec2 w{0.3, -0.8};
  const Vec2 id = pw_scale(w, {1.0, 2.0 / 3.0});
  CHECK(id.x == w.x);
  CHECK(id.y == w.y);
  const Vec2 e2 = pw_scale({0.0, 1.0}, {0.01, 0.4});
  CHECK(e2.x == 0.0);
  CHECK(e2.y == 1.0);
  Stream rng = make_stream(7, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 v{uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const PWTransform t{uniform(rng, 1e-4, 0.9), uniform(rng, 0.05, 0.95)};
    const double d = std::abs(std::log(norm(pw_scale(v, t))) - std::log(norm(v)));
    CHECK(d <= t.beta * std::log(1.0 / t.epsilon) + 1e-12);
  }
}

TEST_CASE("closed-form angle and radius jumps") {
  CHECK(exact_theta_jump(0.0, 1.0) == doctest::Approx(kPi / 4).epsilon(1e-15));
  CHECK(exact_rho_jump(0.0, 1.0) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(exact_theta_jump(1.1, 0.0) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(exact_rho_jump(1.1, 0.0) == 0.0);
  // Chart gluing: continuous across pi/2 and agrees with arctan on charts.
  CHECK(exact_theta_jump(kPi / 2, 0.5) == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(std::tan(exact_theta_jump(0.4, 0.3)) == doctest::Approx(std::tan(0.4) + 0.3).epsilon(1e-13));

  const auto sys = make_nilpotent(1.0, 0.8);
  const double eps = 0.1, beta = 2.0 / 3.0;
  Stream rng = make_stream(9, 0);
  for (int i = 0; i < 1000; ++i) {
    const double th = uniform(rng, 0.0, kTwoPi), z = uniform(rng, -1.0, 1.0);
    const double k = std::pow(eps, 1 - beta) * 0.8 * z;
    Marks m{};
    m[0] = z;
    const AngularJump flow = angular_jump_flow(*sys, {1.0, 0.5}, th, m, eps, beta);
    const AngularJump jac = angular_jump(*sys, {1.0, 0.5}, th, m, eps, beta);
    const double dth = std::remainder(flow.theta - exact_theta_jump(th, k), kTwoPi);
    CHECK(std::abs(dth) < 1e-8);
    CHECK(std::abs(flow.rho - exact_rho_jump(th, k)) < 1e-8);
    CHECK(std::abs(std::remainder(jac.theta - exact_theta_jump(th, k), kTwoPi)) < 1e-12);
    CHECK(std::abs(jac.rho - exact_rho_jump(th, k)) < 1e-12);
  }
}

TEST_CASE("jump compensator of the radius") {
  JumpMeasureSpec none;
  none.c_alpha = 0.0;
  const auto sys = make_nilpotent(1.0, 1.0);
  CHECK(compute_Irho(*sys, none, {1.0, 0.0}, 0.7, 0.1, 2.0 / 3.0) == 0.0);

  // Independent oracle: adaptive quadrature of the closed-form integrand.
  const JumpMeasureSpec m;
  const double eps = 0.1, beta = 2.0 / 3.0, sigma = 1.0;
  for (double th : {0.0, 0.5, 1.3, 2.0, 3.9}) {
    const double s = std::sin(th), c = std::cos(th);
    const double kf = std::pow(eps, 1 - beta) * sigma;
    auto f = [&](double z) {
      const double k = kf * z;
      return (exact_rho_jump(th, k) + exact_rho_jump(th, -k)) * std::pow(z, -2.5);
    };
    const double oracle =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, m.floor, m.cutoff, 20, 1e-13);
    (void)s;
    (void)c;
    CHECK(compute_Irho(*sys, m, {1.0, 0.0}, th, eps, beta, 64) ==
          doctest::Approx(oracle).epsilon(1e-8).scale(1e-6));
  }

  // Taylor limit: I_rho ~ eps^(2(1-beta)) sigma^2 (c^2/2 - s^2 c^2) m2 as eps -> 0.
  for (double th : {0.1, 0.9, 2.2}) {
    const double eps_small = 1e-3;
    const double s = std::sin(th), c = std::cos(th);
    const double lead = std::pow(eps_small, 2 * (1 - beta)) * (0.5 * c * c - s * s * c * c) *
                        jump_moment(m, 2.0, m.floor, m.cutoff);
    CHECK(compute_Irho(*sys, m, {1.0, 0.0}, th, eps_small, beta) == doctest::Approx(lead).epsilon(0.01));
  }
}

TEST_CASE("Sigma0 and R0") {
  const auto sys = make_nilpotent(1.0, 1.0);
  JumpMeasureSpec none;
  none.c_alpha = 0.0;
  CHECK(compute_R0(*sys, none, {1.0, 0.0}, 0.3, 0.1) == 0.0);

  NoiseModel brown;
  brown.measure = none;
  const auto duff = make_duffing(0.5);
  const Vec2 p{0.7, -0.4};
  for (double th : {0.2, 1.4, 3.3}) {
    const FrameCoefficients f = duff->coefficients(p);
    const double s = std::sin(th), c = std::cos(th);
    const double expect = f.A * s * c + f.D[0] * f.D[0] * (0.5 * c * c - s * s * c * c);
    CHECK(sigma0(*duff, brown, p, th, 0.1) == doctest::Approx(expect).epsilon(1e-12));
  }

  // Nilpotent with jumps over the whole |z| < c: the closed form with the
  // second moment 2 C c^(2-alpha) / (2 - alpha) = 4.
  NoiseModel full;
  full.measure.floor = 0.0;
  for (double th : {0.0, 0.4, 1.0, 2.7}) {
    const double s = std::sin(th), c = std::cos(th);
    const double expect = s * c + (1.0 + 4.0) * (0.5 * c * c - s * s * c * c);
    CHECK(sigma0(*sys, full, {1.0, 0.0}, th, 1e-3) == doctest::Approx(expect).epsilon(0.01).scale(1e-3));
  }
  // At theta = pi/2 only R0 is left.
  const double r0 = compute_R0(*sys, full.measure, {1.0, 0.0}, kPi / 2, 0.1);
  CHECK(std::abs(sigma0(*sys, full, {1.0, 0.0}, kPi / 2, 0.1) - r0) < 1e-15);
}
