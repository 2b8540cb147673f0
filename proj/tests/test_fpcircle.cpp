#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyap/fpcircle.hpp"
#include "levyap/systems.hpp"

using namespace levyap;

namespace {

NilpotentFPParams brownian(double eps) {
  NilpotentFPParams p;
  p.eps = eps;
  p.noise.measure.c_alpha = 0.0;
  return p;
}

double sup_diff_on_coarse(const CircleDensity& coarse, const CircleDensity& fine) {
  double d = 0.0;
  for (std::size_t j = 0; j < coarse.grid.n; ++j)
    d = std::max(d, std::abs(coarse.values[j] - fine.values[2 * j]));
  return d;
}

}  // namespace

TEST_CASE("circle grid") {
  const CircleGrid g = make_circle_grid(16);
  CHECK(g.h == doctest::Approx(kTwoPi / 16));
  CHECK(g.nodes[4] == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS(make_circle_grid(15), Error);
  CHECK_THROWS_AS(make_circle_grid(8), Error);
}

TEST_CASE("generators annihilate constants") {
  NilpotentFPParams p;  // with jumps
  for (auto v : {GeneratorVariant::Plain, GeneratorVariant::PW}) {
    const GeneratorMatrix g = build_generator(p, make_circle_grid(128), v);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(128);
    CHECK((g.G * one).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("pure drift discretisation") {
  NilpotentFPParams p;
  p.sigma = 0.0;
  p.a = 1.4;
  const CircleGrid grid = make_circle_grid(256);
  const GeneratorMatrix g = build_generator(p, grid, GeneratorVariant::Plain);
  Eigen::VectorXd f(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) f(j) = std::cos(grid.nodes[j]);
  const Eigen::VectorXd gf = g.G * f;
  double err = 0.0;
  for (std::size_t j = 0; j < grid.n; ++j) err = std::max(err, std::abs(gf(j) - 1.4 * std::pow(std::sin(grid.nodes[j]), 3)));
  CHECK(err < grid.h * grid.h);

  // No jump mass reduces the plain generator to its local part.
  const NilpotentFPParams q = brownian(0.2);
  std::vector<double> drift(grid.n), diff(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double s = std::sin(grid.nodes[j]), c = std::cos(grid.nodes[j]);
    drift[j] = -s * s - 0.04 * s * c * c * c;
    diff[j] = 0.02 * c * c * c * c;
  }
  const Eigen::MatrixXd local = local_generator(grid, drift, diff).G;
  CHECK((build_generator(q, grid, GeneratorVariant::Plain).G - local).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("uniform density for a pure rotation") {
  const CircleGrid grid = make_circle_grid(64);
  const GeneratorMatrix g = local_generator(grid, std::vector<double>(64, 0.8), std::vector<double>(64, 0.0));
  const CircleDensity mu = solve_stationary(g);
  for (double v : mu.values) CHECK(v == doctest::Approx(1.0 / kTwoPi).epsilon(1e-10));
  CHECK(mu.nullity == 1);
}

TEST_CASE("degenerate nullspace is reported") {
  const CircleGrid grid = make_circle_grid(32);
  const GeneratorMatrix g = local_generator(grid, std::vector<double>(32, 0.0), std::vector<double>(32, 0.0));
  try {
    solve_stationary(g);
    FAIL("expected DegenerateNullspace");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateNullspace);
  }
}

TEST_CASE("Brownian-only stationary density") {
  const NilpotentFPParams p = brownian(0.1);
  const CircleDensity m256 = solve_stationary(build_generator(p, make_circle_grid(256), GeneratorVariant::Plain));
  const CircleDensity m512 = solve_stationary(build_generator(p, make_circle_grid(512), GeneratorVariant::Plain));
  const CircleDensity m128 = solve_stationary(build_generator(p, make_circle_grid(128), GeneratorVariant::Plain));
  CHECK(m512.residual < 1e-8);
  double mass = 0.0;
  for (double v : m512.values) mass += v * m512.grid.h;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*std::min_element(m512.values.begin(), m512.values.end()) >= 0.0);
  CHECK(m512.clipped_mass < 1e-6);
  const double d1 = sup_diff_on_coarse(m128, m256), d2 = sup_diff_on_coarse(m256, m512);
  CHECK(d2 < 1e-3);
  // At least second order in h.
  CHECK(d2 <= 0.25 * d1 * 1.05);
  // The explicit adjoint form vanishes on the solution up to truncation error.
  CHECK(adjoint_residual(m512, p) < 1e-4);
}

TEST_CASE("stationary density with jumps") {
  NilpotentFPParams p;
  p.eps = 0.1;
  const CircleDensity mu = solve_stationary(build_generator(p, make_circle_grid(512), GeneratorVariant::Plain));
  CHECK(mu.residual < 1e-6);
  CHECK(mu.clipped_mass < 1e-6);
  const double lam = lyapunov_quadrature(mu, p, GeneratorVariant::Plain);
  CHECK(lam > 0.0);
  std::ostringstream os;
  write_density_csv(os, mu);
  CHECK(os.str().rfind("# levyap-schema v1\ntheta,density\n", 0) == 0);
}

TEST_CASE("quadrature of Q against simple densities") {
  NilpotentFPParams p;
  p.sigma = 0.0;
  p.noise.measure.c_alpha = 0.0;
  CircleDensity uni;
  uni.grid = make_circle_grid(64);
  uni.values.assign(64, 1.0 / kTwoPi);
  CHECK(std::abs(lyapunov_quadrature(uni, p, GeneratorVariant::Plain)) < 1e-14);
}

TEST_CASE("log-stretch integral") {
  NilpotentFPParams p;
  p.eps = 0.1;
  p.noise.measure.floor = 0.0;
  const double es = p.eps * p.sigma;
  // theta = 0: int 1/2 log(1 + (eps sigma z)^2) nu(dz).
  // z = t^2 removes the endpoint singularity of the density.
  auto f = [&](double t) {
    const double t4 = t * t * t * t;
    return t4 == 0.0 ? 2.0 * es * es : 2.0 * std::log1p(es * es * t4) / t4;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  const double oracle = ts.integrate(f, 0.0, 1.0, 1e-14);
  CHECK(jump_log_integral(p, 0.0) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(jump_log_integral(p, 0.0) > 0.0);

  // Small eps: the integral over eps^2 tends to sigma^2 (c^2/2 - s^2 c^2) m2.
  const double m2 = jump_moment(p.noise.measure, 2.0, 0.0, 1.0);
  for (double eps : {1e-2, 1e-3}) {
    p.eps = eps;
    double worst = 0.0, scale = 0.0;
    for (int j = 0; j < 64; ++j) {
      const double th = kTwoPi * j / 64.0, s = std::sin(th), c = std::cos(th);
      const double lead = (0.5 * c * c - s * s * c * c) * m2;
      worst = std::max(worst, std::abs(jump_log_integral(p, th) / (eps * eps) - lead));
      scale = std::max(scale, std::abs(lead));
    }
    CHECK(worst <= 0.01 * scale);
  }
}
