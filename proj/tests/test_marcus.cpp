#include <doctest.h>

#include <cmath>
#include <vector>

#include "levyap/marcus.hpp"
#include "levyap/rng.hpp"
#include "levyap/systems.hpp"
#include "test_models.hpp"

using namespace levyap;

namespace {

Marks mark(double z) {
  Marks m{};
  m[0] = z;
  return m;
}

NoiseModel brownian_only() {
  NoiseModel n;
  n.measure.c_alpha = 0.0;
  return n;
}

}  // namespace

TEST_CASE("jump map: zero mark, reversal and Liouville") {
  const testing::SwirlFields f;
  const Vec2 x{0.3, -0.7};
  const Vec2 same = marcus_jump_map(f, 0.5, mark(0.0), x);
  CHECK(same.x == x.x);
  CHECK(same.y == x.y);
  const Mat2 id = marcus_jump_jacobian(f, 0.5, mark(0.0), x);
  CHECK(id.xx == 1.0);
  CHECK(id.xy == 0.0);
  CHECK(id.yx == 0.0);
  CHECK(id.yy == 1.0);

  Stream rng = make_stream(4, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{2.0 * unit_from_bits(rng()) - 1.0, 2.0 * unit_from_bits(rng()) - 1.0};
    const double z = 2.0 * unit_from_bits(rng()) - 1.0;
    const Vec2 q = marcus_jump_map(f, 0.8, mark(z), p, 64);
    const Vec2 back = marcus_jump_map(f, 0.8, mark(-z), q, 64);
    CHECK(std::abs(back.x - p.x) < 1e-10);
    CHECK(std::abs(back.y - p.y) < 1e-10);
    CHECK(marcus_jump_jacobian(f, 0.8, mark(z), p, 64).det() == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("jump map of the nilpotent system is the closed-form shear") {
  const auto sys = make_nilpotent(1.3, 0.7);
  Stream rng = make_stream(8, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 u{4.0 * unit_from_bits(rng()) - 2.0, 4.0 * unit_from_bits(rng()) - 2.0};
    const double z = 2.0 * unit_from_bits(rng()) - 1.0, eps = 0.3;
    const Vec2 flow = marcus_jump_flow(*sys, eps, mark(z), u, 8, false).x;
    const Vec2 fast = apply_marcus_jump(*sys, eps, mark(z), u, 8, false).x;
    const Vec2 exact{u.x, eps * 0.7 * z * u.x + u.y};
    CHECK(std::abs(flow.x - exact.x) < 1e-14);
    CHECK(std::abs(flow.y - exact.y) < 1e-14);
    CHECK(fast.x == exact.x);
    CHECK(std::abs(fast.y - exact.y) < 1e-15);
    const Mat2 j = marcus_jump_jacobian(*sys, eps, mark(z), u);
    CHECK(j.xx == doctest::Approx(1.0));
    CHECK(j.xy == doctest::Approx(0.0));
    CHECK(j.yx == doctest::Approx(eps * 0.7 * z));
    CHECK(j.yy == doctest::Approx(1.0));
  }
  // Marcus and Ito coefficients coincide: the compensator integrand vanishes.
  const JumpMeasureSpec m;
  const Vec2 comp = compensator_drift(*sys, 0.3, m, {0.4, -1.1});
  CHECK(comp.x == 0.0);
  CHECK(std::abs(comp.y) < 1e-15);
}

TEST_CASE("drift-only stepping conserves H") {
  const auto duff = make_duffing(1.0);
  StepperConfig cfg;
  const NoiseModel noise = brownian_only();
  Stream rng = make_stream(1, 0);
  const Vec2 x0{1.0, 0.0};
  CHECK(duff->H(x0) == 0.75);

  // One unit of time.
  double worst = 0.0;
  integrate(*duff, 0.0, noise, x0, 1.0, cfg, rng,
            [&](const TrajectoryState& s) { worst = std::max(worst, std::abs(duff->H(s.x) - 0.75)); });
  CHECK(worst <= 1e-8);

  // Level set over [0, 100].
  worst = 0.0;
  integrate(*duff, 0.0, noise, x0, 100.0, cfg, rng,
            [&](const TrajectoryState& s) { worst = std::max(worst, std::abs(duff->H(s.x) - 0.75)); });
  CHECK(worst <= 1e-6);
}

TEST_CASE("linear flow of the unperturbed nilpotent system") {
  const auto sys = make_nilpotent(1.0, 1.0);
  StepperConfig cfg;
  Stream rng = make_stream(1, 0);
  const Vec2 u0{0.4, -1.5};
  const TrajectorySummary r = integrate(*sys, 0.0, brownian_only(), u0, 1.0, cfg, rng);
  CHECK(r.steps == 1000);
  CHECK(std::abs(r.final_state.x.x - (u0.x + u0.y * 1.0)) < 1e-10);
  CHECK(std::abs(r.final_state.x.y - u0.y) < 1e-10);

  const TrajectorySummary z = integrate(*sys, 0.0, brownian_only(), u0, 0.0, cfg, rng);
  CHECK(z.steps == 0);
  CHECK(z.final_state.x.x == u0.x);
  CHECK(z.final_state.t == 0.0);
}

TEST_CASE("exit detection") {
  const auto duff = make_duffing(1.0);
  StepperConfig cfg;
  Stream rng = make_stream(1, 0);
  try {
    integrate(*duff, 0.1, NoiseModel{}, {0.0, 0.0}, 10.0, cfg, rng);
    FAIL("expected an exit");
  } catch (const ExitDetected& e) {
    CHECK(e.flag() == ExitFlag::CriticalPoint);
    CHECK(e.time() == 0.0);
  }
  CHECK(classify_position(*duff, {1e9, 0.0}, cfg) == ExitFlag::Explosion);
  CHECK(classify_position(*duff, {1.0, 0.0}, cfg) == ExitFlag::None);
}

TEST_CASE("a lone jump in a zero-length step is the jump map") {
  const testing::SwirlFields f;
  NoiseModel noise;
  StepperConfig cfg;
  cfg.flow_substeps = 16;
  TrajectoryState s;
  s.x = {0.2, 0.9};
  IncrementBatch batch;
  batch.dt = 0.0;
  batch.jumps.push_back({0.0, 0, 0.6});
  step(f, 0.5, noise, s, batch, cfg);
  const Vec2 expect = marcus_jump_map(f, 0.5, mark(0.6), {0.2, 0.9}, 16);
  CHECK(s.x.x == expect.x);
  CHECK(s.x.y == expect.y);
}

TEST_CASE("stepping is reproducible and single-axis jumps commute") {
  const testing::SwirlFields f;
  StepperConfig cfg;
  TrajectoryState a, b;
  a.x = b.x = {0.2, 0.9};
  IncrementBatch ab, ba;
  ab.dt = ba.dt = 1e-3;
  ab.jumps = {{1e-4, 0, 0.3}, {5e-4, 0, -0.8}};
  ba.jumps = {{1e-4, 0, -0.8}, {5e-4, 0, 0.3}};
  step(f, 0.5, NoiseModel{}, a, ab, cfg);
  step(f, 0.5, NoiseModel{}, b, ba, cfg);
  // Flows of one field commute; only the integrator error of the flows remains.
  CHECK(std::abs(a.x.x - b.x.x) < 1e-6);
  CHECK(std::abs(a.x.y - b.x.y) < 1e-6);

  const auto duff = make_duffing(1.0);
  std::vector<Vec2> p1, p2;
  for (auto* out : {&p1, &p2}) {
    Stream rng = make_stream(21, 5);
    integrate(*duff, 0.2, NoiseModel{}, {1.0, 0.0}, 2.0, cfg, rng,
              [&](const TrajectoryState& s) { out->push_back(s.x); });
  }
  REQUIRE(p1.size() == p2.size());
  bool same = true;
  for (std::size_t i = 0; i < p1.size(); ++i) same = same && p1[i].x == p2[i].x && p1[i].y == p2[i].y;
  CHECK(same);
}

TEST_CASE("pathwise agreement of (u1, u2) with the angle-radius equations") {
  // Same noise drives the linear system and an independent Euler scheme for
  // (theta, rho) in Ito form; jumps use the closed-form angle and radius maps.
  const double a = 1.0, sigma = 1.0, eps = 0.3, dt = 1e-3;
  const auto sys = make_nilpotent(a, sigma);
  NoiseModel noise;
  noise.measure.floor = 0.05;
  StepperConfig cfg;
  cfg.dt = dt;
  MarcusStepper stepper(*sys, eps, noise, cfg);
  IncrementSampler sampler(noise, dt, true);
  const std::size_t paths = 1000, steps = 1000;
  double err_theta = 0.0, err_rho = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    Stream rng = make_stream(17, p);
    TrajectoryState s;
    s.x = {std::cos(0.4), std::sin(0.4)};
    double theta = 0.4, rho = 0.0;
    IncrementBatch batch;
    for (std::size_t i = 0; i < steps; ++i) {
      sampler.sample(rng, batch);
      stepper.step(s, batch);
      const double c = std::cos(theta), sn = std::sin(theta), db = batch.brownian[0];
      const double k2 = eps * eps * sigma * sigma;
      const double dtheta = (-a * sn * sn - k2 * sn * c * c * c) * dt + eps * sigma * c * c * db;
      const double drho = (a * sn * c + k2 * (0.5 * c * c - sn * sn * c * c)) * dt + eps * sigma * sn * c * db;
      theta += dtheta;
      rho += drho;
      if (batch.jump_count > 0) {
        const double k = eps * sigma * batch.mark_sum[0];
        rho += exact_rho_jump(theta, k);
        theta = exact_theta_jump(theta, k);
      }
    }
    const double ang = std::atan2(s.x.y, s.x.x);
    err_theta += std::abs(std::remainder(ang - theta, kPi));
    err_rho += std::abs(std::log(norm(s.x)) - rho);
  }
  err_theta /= paths;
  err_rho /= paths;
  CHECK(err_theta < std::sqrt(dt));
  CHECK(err_rho < std::sqrt(dt));
}
