#include "levyap/frame.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "levyap/quadrature.hpp"
#include "levyap/simd.hpp"

namespace levyap {

namespace {

Vec2 central_gradient(const std::function<double(const Vec2&)>& f, const Vec2& x) {
  const double h = 1e-6 * (1.0 + norm(x));
  const double dx = (f({x.x + h, x.y}) - f({x.x - h, x.y})) / (2.0 * h);
  const double dy = (f({x.x, x.y + h}) - f({x.x, x.y - h})) / (2.0 * h);
  return {dx, dy};
}

Vec2 checked_gradient(const HamiltonianModel& model, const Vec2& x) {
  const Vec2 g = model.grad_H(x);
  if (!(norm(g) >= model.tol_crit()))
    fail(ErrorKind::CriticalPoint, "|grad H| below tol_crit at (" + std::to_string(x.x) + ", " +
                                       std::to_string(x.y) + ")");
  return g;
}

struct SigmaPair {
  double s1 = 0.0;
  double s2 = 0.0;
};

// sigma1_k, sigma2_k at angle (c, s).
SigmaPair sigma_pair(const FrameCoefficients& f, std::size_t k, double c, double s, double eps,
                     double beta) {
  const double lo = std::pow(eps, 1.0 - beta);
  const double hi = std::pow(eps, 1.0 + beta);
  SigmaPair out;
  out.s1 = lo * f.D[k] * c * c - eps * (f.B[k] - f.E[k]) * s * c - hi * f.C[k] * s * s;
  out.s2 = lo * f.D[k] * s * c + eps * (f.B[k] * c * c + f.E[k] * s * s) + hi * f.C[k] * s * c;
  return out;
}

FrameCoefficients combine(const FrameCoefficients& a, const FrameCoefficients& b, double wa,
                          double wb) {
  FrameCoefficients out;
  out.dimension = a.dimension;
  out.A = wa * a.A + wb * b.A;
  for (std::size_t k = 0; k < a.dimension; ++k) {
    out.B[k] = wa * a.B[k] + wb * b.B[k];
    out.C[k] = wa * a.C[k] + wb * b.C[k];
    out.D[k] = wa * a.D[k] + wb * b.D[k];
    out.E[k] = wa * a.E[k] + wb * b.E[k];
  }
  return out;
}

}  // namespace

Vec2 PerturbationFields::grad_a1(std::size_t k, const Vec2& x) const {
  return central_gradient([&](const Vec2& p) { return a1(k, p); }, x);
}

Vec2 PerturbationFields::grad_a2(std::size_t k, const Vec2& x) const {
  return central_gradient([&](const Vec2& p) { return a2(k, p); }, x);
}

FramePair frame_vectors(const HamiltonianModel& model, const Vec2& x) {
  const Vec2 g = checked_gradient(model, x);
  const double n2 = dot(g, g);
  return {{g.y, -g.x}, (1.0 / n2) * g};
}

double coefficient_A(const HamiltonianModel& model, const Vec2& x) {
  const Vec2 g = checked_gradient(model, x);
  const Mat2 h = model.hess_H(x);
  const double n2 = dot(g, g);
  const double num = (g.y * g.y - g.x * g.x) * (h.yy - h.xx) + 4.0 * g.x * g.y * h.xy;
  return num / (n2 * n2);
}

FrameCoefficients frame_coefficients(const HamiltonianModel& model, const PerturbationFields& fields,
                                     const Vec2& x) {
  const FramePair u = frame_vectors(model, x);
  FrameCoefficients out;
  out.dimension = fields.dimension();
  out.A = coefficient_A(model, x);
  for (std::size_t k = 0; k < out.dimension; ++k) {
    const double a1 = fields.a1(k, x);
    const double a2 = fields.a2(k, x);
    const Vec2 g1 = fields.grad_a1(k, x);
    const Vec2 g2 = fields.grad_a2(k, x);
    out.B[k] = dot(u.u1, g1) - out.A * a2;
    out.C[k] = dot(u.u2, g1) + out.A * a1;
    out.D[k] = dot(u.u1, g2);
    out.E[k] = dot(u.u2, g2);
  }
  return out;
}

Vec2 decompose_tangent(const HamiltonianModel& model, const Vec2& x, const Vec2& v) {
  const Vec2 g = checked_gradient(model, x);
  const Vec2 u1{g.y, -g.x};
  return {dot(v, u1) / dot(g, g), dot(v, g)};
}

Vec2 recompose_tangent(const HamiltonianModel& model, const Vec2& x, const Vec2& w) {
  const FramePair u = frame_vectors(model, x);
  return w.x * u.u1 + w.y * u.u2;
}

Vec2 pw_scale(const Vec2& w, const PWTransform& t) {
  return {std::pow(t.epsilon, t.beta) * w.x, w.y};
}

GradeScales grade_scales(double eps, double beta) {
  GradeScales g;
  g.eps = eps;
  g.lo = std::pow(eps, 1.0 - beta);
  g.hi = std::pow(eps, 1.0 + beta);
  for (std::size_t j = 0; j < 5; ++j) g.wz[j] = std::pow(eps, 2.0 - 2.0 * beta + j * beta);
  return g;
}

GradedTerms graded_terms(const FrameCoefficients& f, double theta, double eps, double beta,
                         const FieldDerivatives* along) {
  return graded_terms(f, theta, grade_scales(eps, beta), along);
}

GradedTerms graded_terms(const FrameCoefficients& f, double theta, const GradeScales& sc_,
                         const FieldDerivatives* along) {
  GradedTerms g;
  g.dimension = f.dimension;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cc = c * c, ss = s * s, sc = s * c, dd = cc - ss;
  const double eps = sc_.eps, lo = sc_.lo, hi = sc_.hi;

  for (std::size_t k = 0; k < f.dimension; ++k) {
    const double B = f.B[k], C = f.C[k], D = f.D[k], E = f.E[k];
    const std::array<double, 3> q{D * cc, -(B - E) * sc, -C * ss};
    const std::array<double, 3> p{D * sc, B * cc + E * ss, C * sc};
    const std::array<double, 3> dq{-2.0 * D * sc, -(B - E) * dd, -2.0 * C * sc};
    const std::array<double, 3> dp{D * dd, 2.0 * (E - B) * sc, C * dd};
    std::array<double, 3> vq{}, vp{};
    if (along) {
      const FrameCoefficients& d = (*along)[k];
      vq = {d.D[k] * cc, -(d.B[k] - d.E[k]) * sc, -d.C[k] * ss};
      vp = {d.D[k] * sc, d.B[k] * cc + d.E[k] * ss, d.C[k] * sc};
    }
    g.Q[k] = q;
    g.P[k] = p;
    auto& qt = g.Qt[k];
    auto& pt = g.Pt[k];
    qt.fill(0.0);
    pt.fill(0.0);
    // d_theta(X_i) * Q_j lands at grade i + j; eps (V . X_i) at grade i + 1.
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        qt[i + j] += dq[i] * q[j];
        pt[i + j] += dp[i] * q[j];
      }
      qt[i + 1] += vq[i];
      pt[i + 1] += vp[i];
    }
    g.sigma1[k] = lo * q[0] + eps * q[1] + hi * q[2];
    g.sigma2[k] = lo * p[0] + eps * p[1] + hi * p[2];
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      t1 += sc_.wz[j] * qt[j];
      t2 += sc_.wz[j] * pt[j];
    }
    g.sigma1_tilde[k] = t1;
    g.sigma2_tilde[k] = t2;
  }
  return g;
}

Vec2 SystemModel::drift(const Vec2& x) const {
  const Vec2 g = grad_H(x);
  return {g.y, -g.x};
}

Mat2 SystemModel::drift_jacobian(const Vec2& x) const {
  const Mat2 h = hess_H(x);
  return {h.yx, h.yy, -h.xx, -h.xy};
}

FrameCoefficients SystemModel::coefficients(const Vec2& x) const {
  return frame_coefficients(*this, *this, x);
}

Vec2 SystemModel::to_frame(const Vec2& x, const Vec2& v) const {
  return decompose_tangent(*this, x, v);
}

Vec2 SystemModel::from_frame(const Vec2& x, const Vec2& w) const {
  return recompose_tangent(*this, x, w);
}

FrameCoefficients SystemModel::coefficients_along_field(std::size_t k, const Vec2& x) const {
  FrameCoefficients zero;
  zero.dimension = dimension();
  if (constant_coefficients()) return zero;
  const Vec2 v = field(k, x);
  const double nv = norm(v);
  if (nv == 0.0) return zero;
  const double t = 1e-5 * (1.0 + norm(x)) / nv;
  const FrameCoefficients plus = coefficients(x + t * v);
  const FrameCoefficients minus = coefficients(x - t * v);
  return combine(plus, minus, 1.0 / (2.0 * t), -1.0 / (2.0 * t));
}

double SystemModel::frame_shear(std::size_t) const { return std::numeric_limits<double>::quiet_NaN(); }

AngularJump angular_jump(const SystemModel& system, const Vec2& x, double theta, const Marks& z,
                         double eps, double beta, std::size_t substeps) {
  AngularJump out{x, wrap_angle(theta), 0.0};
  if (eps == 0.0) return out;
  const double eb = std::pow(eps, beta);
  const Vec2 w0{std::cos(theta), std::sin(theta)};
  const Vec2 w{w0.x / eb, w0.y};
  const JumpFlow flow = apply_marcus_jump(system, eps, z, x, substeps, true, system.tol_crit());
  const Mat2& j = flow.jacobian;
  if (flow.x.x == x.x && flow.x.y == x.y && j.xx == 1.0 && j.xy == 0.0 && j.yx == 0.0 && j.yy == 1.0)
    return out;
  const Vec2 v = system.from_frame(x, w);
  const Vec2 w2 = system.to_frame(flow.x, j * v);
  const Vec2 wt{eb * w2.x, w2.y};
  const Vec2 d = wt - w0;
  out.x = flow.x;
  out.theta = wrap_angle(std::atan2(wt.y, wt.x));
  out.rho = 0.5 * std::log1p((2.0 * dot(w0, d) + dot(d, d)) / dot(w0, w0));
  return out;
}

AngularJump angular_jump_flow(const SystemModel& system, const Vec2& x, double theta,
                              const Marks& z, double eps, double beta, std::size_t substeps) {
  require(substeps >= 1, ErrorKind::InvalidParameter, "flow substeps must be >= 1");
  const std::size_t dim = system.dimension();
  struct State {
    Vec2 x;
    double th, r;
  };
  auto rhs = [&](const State& st) {
    State d{{}, 0.0, 0.0};
    const FrameCoefficients f = system.coefficients(st.x);
    const double c = std::cos(st.th), s = std::sin(st.th);
    for (std::size_t k = 0; k < dim; ++k) {
      if (z[k] == 0.0) continue;
      d.x += (eps * z[k]) * system.field(k, st.x);
      const SigmaPair sp = sigma_pair(f, k, c, s, eps, beta);
      d.th += z[k] * sp.s1;
      d.r += z[k] * sp.s2;
    }
    return d;
  };
  auto axpy = [](const State& a, double h, const State& d) {
    return State{a.x + h * d.x, a.th + h * d.th, a.r + h * d.r};
  };
  const double h = 1.0 / static_cast<double>(substeps);
  State st{x, theta, 0.0};
  for (std::size_t i = 0; i < substeps; ++i) {
    const State k1 = rhs(st);
    const State k2 = rhs(axpy(st, 0.5 * h, k1));
    const State k3 = rhs(axpy(st, 0.5 * h, k2));
    const State k4 = rhs(axpy(st, h, k3));
    st.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    st.th += (h / 6.0) * (k1.th + 2.0 * k2.th + 2.0 * k3.th + k4.th);
    st.r += (h / 6.0) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
  }
  return {st.x, wrap_angle(st.th), st.r};
}

IrhoEvaluator::IrhoEvaluator(const SystemModel& system, const JumpMeasureSpec& measure, double eps,
                             double beta, std::size_t nodes_per_sign, std::size_t substeps)
    : system_(system), eps_(eps), beta_(beta), substeps_(substeps), dim_(system.dimension()) {
  measure.validate();
  if (!measure.has_mass() || eps == 0.0) return;
  quad_ = jump_quadrature(measure, nodes_per_sign);
  const double scale = std::pow(eps, 1.0 - beta);
  for (std::size_t k = 0; k < dim_; ++k) {
    const double shear = system.frame_shear(k);
    if (!std::isfinite(shear)) continue;
    auto& m = shear_marks_[k];
    m.resize(quad_.size());
    for (std::size_t i = 0; i < quad_.size(); ++i) m[i] = scale * shear * quad_.marks[i];
  }
}

double IrhoEvaluator::operator()(const Vec2& x, double theta) const {
  if (quad_.size() == 0) return 0.0;
  const double c = std::cos(theta), s = std::sin(theta);
  double total = 0.0;
  std::optional<FrameCoefficients> coeffs;
  for (std::size_t k = 0; k < dim_; ++k) {
    if (!shear_marks_[k].empty()) {
      // zeta2(z) + zeta2(-z) in closed form; the odd sigma2 terms cancel.
      total += simd::symmetric_log_stretch(shear_marks_[k], quad_.weights, c, s);
      continue;
    }
    if (!coeffs) coeffs = system_.coefficients(x);
    const double s2 = sigma_pair(*coeffs, k, c, s, eps_, beta_).s2;
    for (std::size_t i = 0; i < quad_.size(); ++i) {
      double pair = 0.0;
      for (double sign : {1.0, -1.0}) {
        Marks z{};
        z[k] = sign * quad_.marks[i];
        const AngularJump j = angular_jump(system_, x, theta, z, eps_, beta_, substeps_);
        pair += j.rho - z[k] * s2;
      }
      total += quad_.weights[i] * pair;
    }
  }
  return total;
}

double compute_Irho(const SystemModel& system, const JumpMeasureSpec& measure, const Vec2& x,
                    double theta, double eps, double beta, std::size_t nodes_per_sign) {
  return IrhoEvaluator(system, measure, eps, beta, nodes_per_sign)(x, theta);
}

namespace {

double r0_with_nodes(const SystemModel& system, const JumpMeasureSpec& measure, const Vec2& x,
                     double theta, double eps, double beta, std::size_t z_nodes,
                     std::size_t ab_nodes) {
  const JumpQuadrature q = jump_quadrature(measure, z_nodes);
  const GaussRule& g = gauss_legendre(ab_nodes);
  const std::size_t dim = system.dimension();
  const bool constant = system.constant_coefficients();
  const FrameCoefficients here = system.coefficients(x);
  double total = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t iz = 0; iz < q.size(); ++iz) {
      for (double sign : {1.0, -1.0}) {
        const double zk = sign * q.marks[iz];
        double inner = 0.0;
        for (std::size_t ia = 0; ia < g.size(); ++ia) {
          const double a = g.nodes[ia];
          double row = 0.0;
          for (std::size_t ib = 0; ib < g.size(); ++ib) {
            Marks z{};
            z[k] = a * g.nodes[ib] * zk;
            const AngularJump j = angular_jump(system, x, theta, z, eps, beta);
            const double d = constant ? here.D[k] : system.coefficients(j.x).D[k];
            const double cz = std::cos(j.theta), sz = std::sin(j.theta);
            const double zd = zk * d;
            row += g.weights[ib] * zd * zd * cz * cz * (cz * cz - sz * sz);
          }
          inner += g.weights[ia] * a * row;
        }
        total += q.weights[iz] * inner;
      }
    }
  }
  return total;
}

}  // namespace

double compute_R0(const SystemModel& system, const JumpMeasureSpec& measure, const Vec2& x,
                  double theta, double eps, const R0Options& opts) {
  measure.validate();
  if (!measure.has_mass()) return 0.0;
  const double coarse =
      r0_with_nodes(system, measure, x, theta, eps, opts.beta, opts.z_nodes, opts.ab_nodes);
  if (!opts.check_convergence) return coarse;
  const double fine =
      r0_with_nodes(system, measure, x, theta, eps, opts.beta, 2 * opts.z_nodes, opts.ab_nodes);
  // Scale of the integrand magnitude, so that values near a zero of the
  // angular factor are judged against the overall size.
  const FrameCoefficients f = system.coefficients(x);
  double scale = 0.0;
  for (std::size_t k = 0; k < system.dimension(); ++k) scale += f.D[k] * f.D[k];
  scale *= 0.5 * jump_moment(measure, 2.0, measure.floor, measure.cutoff);
  const double tol = opts.tolerance * std::max(std::abs(fine), 1e-3 * scale);
  if (!(std::abs(fine - coarse) <= tol))
    fail(ErrorKind::QuadratureFailure, "R0 quadrature did not converge under node doubling");
  return fine;
}

double sigma0(const SystemModel& system, const NoiseModel& noise, const Vec2& x, double theta,
              double eps, const Sigma0Options& opts) {
  const FrameCoefficients f = system.coefficients(x);
  const double c = std::cos(theta), s = std::sin(theta);
  const double angular = 0.5 * c * c - s * s * c * c;
  double d2 = 0.0;
  for (std::size_t k = 0; k < f.dimension; ++k) d2 += f.D[k] * f.D[k];
  double value = f.A * s * c + noise.continuous_variance() * d2 * angular;
  if (!noise.has_jumps()) return value;
  if (opts.irho_fallback) {
    const double beta = opts.r0.beta;
    value += std::pow(eps, -2.0 * (1.0 - beta)) *
             compute_Irho(system, noise.measure, x, theta, eps, beta, opts.r0.z_nodes);
  } else {
    value += compute_R0(system, noise.measure, x, theta, eps, opts.r0);
  }
  return value;
}

}  // namespace levyap
