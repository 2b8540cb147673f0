#include "levyap/fpcircle.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "levyap/parallel.hpp"
#include "levyap/simd.hpp"
#include "levyap/systems.hpp"

namespace levyap {

namespace {

constexpr double kD1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};      // / (12 h)
constexpr double kD2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};  // / (12 h^2)

std::size_t wrap_index(long j, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((j % m) + m) % m);
}

// First derivative of periodic grid values.
std::vector<double> d1(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int o = -2; o <= 2; ++o) acc += kD1[o + 2] * f[wrap_index(static_cast<long>(j) + o, n)];
    out[j] = acc / (12.0 * h);
  }
  return out;
}

double second_moment(const NoiseModel& noise) {
  if (!noise.has_jumps()) return 0.0;
  return jump_moment(noise.measure, 2.0, noise.measure.floor, noise.measure.cutoff);
}

}  // namespace

CircleGrid make_circle_grid(std::size_t n) {
  require(n >= 16 && n % 2 == 0, ErrorKind::InvalidGrid, "circle grid needs n >= 16 and even");
  CircleGrid g;
  g.n = n;
  g.h = kTwoPi / static_cast<double>(n);
  g.nodes.resize(n);
  for (std::size_t j = 0; j < n; ++j) g.nodes[j] = g.h * static_cast<double>(j);
  return g;
}

const char* to_string(GeneratorVariant v) { return v == GeneratorVariant::Plain ? "plain" : "pw"; }

GeneratorVariant parse_generator_variant(const std::string& s) {
  if (s == "plain") return GeneratorVariant::Plain;
  if (s == "pw") return GeneratorVariant::PW;
  fail(ErrorKind::InvalidParameter, "generator variant must be plain or pw, got '" + s + "'");
}

PeriodicSpline::PeriodicSpline(const CircleGrid& grid) : grid_(grid) {
  const std::size_t n = grid.n;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t im = wrap_index(static_cast<long>(i) - 1, n), ip = (i + 1) % n;
    c(i, im) += 1.0;
    c(i, i) += 4.0;
    c(i, ip) += 1.0;
    d(i, im) += 1.0;
    d(i, i) -= 2.0;
    d(i, ip) += 1.0;
  }
  moments_ = (6.0 / (grid.h * grid.h)) * c.partialPivLu().solve(d);
}

void PeriodicSpline::accumulate(double phi, double scale, double* row) const {
  const std::size_t n = grid_.n;
  const double h = grid_.h;
  const double u = wrap_angle(phi) / h;
  std::size_t i = static_cast<std::size_t>(u);
  if (i >= n) i = n - 1;
  const double t = u - static_cast<double>(i);
  const std::size_t ip = (i + 1) % n;
  const double s = 1.0 - t;
  row[i] += scale * s;
  row[ip] += scale * t;
  const double ci = scale * (s * s * s - s) * h * h / 6.0;
  const double cp = scale * (t * t * t - t) * h * h / 6.0;
  for (std::size_t j = 0; j < n; ++j) row[j] += ci * moments_(i, j) + cp * moments_(ip, j);
}

GeneratorMatrix local_generator(const CircleGrid& grid, const std::vector<double>& drift,
                                const std::vector<double>& diffusion) {
  require(drift.size() == grid.n && diffusion.size() == grid.n, ErrorKind::InvalidGrid,
          "coefficient vectors must match the grid");
  GeneratorMatrix out;
  out.grid = grid;
  const std::size_t n = grid.n;
  const double h = grid.h;
  out.G = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int o = -2; o <= 2; ++o) {
      const std::size_t col = wrap_index(static_cast<long>(j) + o, n);
      out.G(j, col) += drift[j] * kD1[o + 2] / (12.0 * h) + diffusion[j] * kD2[o + 2] / (12.0 * h * h);
    }
  }
  return out;
}

GeneratorMatrix build_generator(const NilpotentFPParams& p, const CircleGrid& grid,
                                GeneratorVariant variant, std::size_t threads) {
  require(grid.n >= 16 && grid.n % 2 == 0 && grid.nodes.size() == grid.n, ErrorKind::InvalidGrid,
          "invalid circle grid");
  p.noise.validate();
  const std::size_t n = grid.n;
  const double q = p.noise.continuous_variance();
  const double s2 = p.sigma * p.sigma;
  const double diff = variant == GeneratorVariant::Plain ? p.eps * p.eps * s2 * q
                                                         : s2 * (q + second_moment(p.noise));
  std::vector<double> drift(n), diffusion(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = std::cos(grid.nodes[j]), s = std::sin(grid.nodes[j]);
    drift[j] = -p.a * s * s - diff * s * c * c * c;
    diffusion[j] = 0.5 * diff * c * c * c * c;
  }
  GeneratorMatrix out = local_generator(grid, drift, diffusion);
  out.variant = variant;
  if (variant == GeneratorVariant::PW || !p.noise.has_jumps() || p.eps == 0.0) return out;

  const JumpQuadrature quad = jump_quadrature(p.noise.measure, p.nodes_per_sign);
  const PeriodicSpline spline(grid);
  // Row-major scratch so each worker writes its own row.
  std::vector<double> rows(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t j) {
    double* row = rows.data() + j * n;
    const double c = std::cos(grid.nodes[j]), s = std::sin(grid.nodes[j]);
    double lost = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        const double k = sign * p.eps * p.sigma * quad.marks[i];
        spline.accumulate(std::atan2(s + k * c, c), quad.weights[i], row);
        lost += quad.weights[i];
      }
    }
    row[j] -= lost;
  });
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t col = 0; col < n; ++col) out.G(j, col) += rows[j * n + col];
  return out;
}

CircleDensity solve_stationary(const GeneratorMatrix& gen) {
  const std::size_t n = gen.grid.n;
  require(n >= 16 && gen.G.rows() == static_cast<long>(n) && gen.G.cols() == static_cast<long>(n),
          ErrorKind::InvalidGrid, "generator does not match its grid");
  const double h = gen.grid.h;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(gen.G, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();

  // Nullspace dimension: everything below the first gap of ratio >= 1e6.
  std::size_t rank = n;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (sv(i) >= 1e6 * sv(i + 1)) {
      rank = i + 1;
      break;
    }
  }
  std::size_t nullity = n - rank;
  const Eigen::MatrixXd& u = svd.matrixU();

  Eigen::VectorXd alt(n);
  for (std::size_t j = 0; j < n; ++j) alt(j) = (j % 2 == 0) ? 1.0 : -1.0;
  const double scale = gen.G.cwiseAbs().maxCoeff();
  const bool alt_null = (gen.G.transpose() * alt).cwiseAbs().maxCoeff() <= 1e-9 * scale * n;
  std::size_t effective = nullity;
  if (alt_null && effective >= 2) --effective;
  if (effective != 1)
    fail(ErrorKind::DegenerateNullspace,
         "stationary problem has nullspace dimension " + std::to_string(effective));

  // Minimum-norm combination of the null basis with unit mass.
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  double m2 = 0.0;
  for (std::size_t i = rank; i < n; ++i) {
    const double m = h * u.col(i).sum();
    m2 += m * m;
  }
  require(m2 > 0.0, ErrorKind::DegenerateNullspace, "null vectors carry no mass");
  for (std::size_t i = rank; i < n; ++i) mu += (h * u.col(i).sum() / m2) * u.col(i);

  CircleDensity out;
  out.grid = gen.grid;
  out.nullity = effective;
  out.values.resize(n);
  double clipped = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = mu(j);
    if (v < 0.0) {
      clipped += -v * h;
      v = 0.0;
    }
    out.values[j] = v;
  }
  double mass = 0.0;
  for (double v : out.values) mass += h * v;
  for (double& v : out.values) v /= mass;
  out.clipped_mass = clipped;
  const Eigen::Map<const Eigen::VectorXd> mv(out.values.data(), static_cast<long>(n));
  out.residual = (gen.G.transpose() * mv).cwiseAbs().maxCoeff();
  return out;
}

namespace {

struct LogIntegral {
  std::vector<double> k, w;
};

LogIntegral log_integral_nodes(const NilpotentFPParams& p) {
  LogIntegral out;
  if (!p.noise.has_jumps() || p.eps == 0.0) return out;
  const JumpQuadrature quad = jump_quadrature(p.noise.measure, p.nodes_per_sign);
  out.k.resize(quad.size());
  out.w = quad.weights;
  for (std::size_t i = 0; i < quad.size(); ++i) out.k[i] = p.eps * p.sigma * quad.marks[i];
  return out;
}

}  // namespace

double jump_log_integral(const NilpotentFPParams& p, double theta) {
  const LogIntegral li = log_integral_nodes(p);
  if (li.k.empty()) return 0.0;
  return simd::symmetric_log_stretch(li.k, li.w, std::cos(theta), std::sin(theta));
}

double lyapunov_quadrature(const CircleDensity& mu, const NilpotentFPParams& p,
                           GeneratorVariant variant) {
  const CircleGrid& g = mu.grid;
  const double q = p.noise.continuous_variance();
  const double s2 = p.sigma * p.sigma;
  std::vector<double> qv(g.n);
  if (variant == GeneratorVariant::Plain) {
    const LogIntegral li = log_integral_nodes(p);
    for (std::size_t j = 0; j < g.n; ++j) {
      const double c = std::cos(g.nodes[j]), s = std::sin(g.nodes[j]);
      double v = p.a * s * c + q * p.eps * p.eps * s2 * (0.5 * c * c - s * s * c * c);
      if (!li.k.empty()) v += simd::symmetric_log_stretch(li.k, li.w, c, s);
      qv[j] = v;
    }
    return g.h * simd::dot(qv, mu.values);
  }
  const double factor = s2 * (q + second_moment(p.noise));
  for (std::size_t j = 0; j < g.n; ++j) {
    const double c = std::cos(g.nodes[j]), s = std::sin(g.nodes[j]);
    qv[j] = p.a * s * c + factor * (0.5 * c * c - s * s * c * c);
  }
  return std::pow(p.eps, 2.0 / 3.0) * g.h * simd::dot(qv, mu.values);
}

double adjoint_residual(const CircleDensity& mu, const NilpotentFPParams& p) {
  const CircleGrid& g = mu.grid;
  const std::size_t n = g.n;
  const double q = p.noise.continuous_variance();
  std::vector<double> c2(n), s2mu(n), c2mu(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = std::cos(g.nodes[j]), s = std::sin(g.nodes[j]);
    c2[j] = c * c;
    s2mu[j] = s * s * mu.values[j];
    c2mu[j] = c * c * mu.values[j];
  }
  const std::vector<double> drift_term = d1(s2mu, g.h);
  std::vector<double> inner = d1(c2mu, g.h);
  for (std::size_t j = 0; j < n; ++j) inner[j] *= c2[j];
  const std::vector<double> diff_term = d1(inner, g.h);

  std::vector<double> jump_term(n, 0.0);
  if (p.noise.has_jumps() && p.eps > 0.0) {
    const JumpQuadrature quad = jump_quadrature(p.noise.measure, p.nodes_per_sign);
    const PeriodicSpline spline(g);
    // f(theta) = cos^2(theta) mu(theta) on the grid, interpolated at the jump targets.
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double c = std::cos(g.nodes[j]), s = std::sin(g.nodes[j]);
      std::fill(row.begin(), row.end(), 0.0);
      double lost = 0.0;
      for (std::size_t i = 0; i < quad.size(); ++i) {
        for (double sign : {1.0, -1.0}) {
          const double k = sign * p.eps * p.sigma * quad.marks[i];
          spline.accumulate(std::atan2(s + k * c, c), quad.weights[i], row.data());
          lost += quad.weights[i];
        }
      }
      jump_term[j] = simd::dot(row, c2mu) - lost * c2mu[j];
    }
  }

  double worst = 0.0;
  const double dcoef = 0.5 * p.eps * p.eps * p.sigma * p.sigma * q;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = c2[j] * (p.a * drift_term[j] + dcoef * diff_term[j]) + jump_term[j];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

void write_density_csv(std::ostream& os, const CircleDensity& mu) {
  os << "# levyap-schema v1\n";
  os << "theta,density\n";
  char buf[96];
  for (std::size_t j = 0; j < mu.grid.n; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", mu.grid.nodes[j], mu.values[j]);
    os << buf;
  }
}

}  // namespace levyap
