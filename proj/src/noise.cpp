#include "levyap/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levyap/quadrature.hpp"

namespace levyap {

void JumpMeasureSpec::validate() const {
  require(alpha > 0.0 && alpha < 2.0, ErrorKind::InvalidMeasure, "alpha must lie in (0, 2)");
  require(c_alpha >= 0.0 && std::isfinite(c_alpha), ErrorKind::InvalidMeasure,
          "c_alpha must be finite and >= 0");
  require(cutoff > 0.0 && std::isfinite(cutoff), ErrorKind::InvalidMeasure, "cutoff must be > 0");
  require(floor >= 0.0 && floor < cutoff, ErrorKind::InvalidMeasure, "floor must lie in [0, cutoff)");
  require(dimension >= 1 && dimension <= kMaxDrivers, ErrorKind::InvalidMeasure,
          "dimension must lie in [1, " + std::to_string(kMaxDrivers) + "]");
}

double JumpMeasureSpec::intensity() const {
  if (!has_mass()) return 0.0;
  require(floor > 0.0, ErrorKind::InvalidMeasure, "floor = 0 gives infinitely many jumps");
  return 2.0 * c_alpha * (std::pow(floor, -alpha) - std::pow(cutoff, -alpha)) / alpha;
}

simd::PowerLawParams JumpMeasureSpec::power_law() const {
  simd::PowerLawParams p;
  p.head = std::pow(floor, -alpha);
  p.span = p.head - std::pow(cutoff, -alpha);
  p.neg_inv_alpha = -1.0 / alpha;
  return p;
}

double NoiseModel::continuous_variance() const {
  double q = brownian ? 1.0 : 0.0;
  if (small_jumps == SmallJumps::Gaussian && measure.has_mass() && measure.floor > 0.0)
    q += jump_moment(measure, 2.0, 0.0, measure.floor);
  return q;
}

void NoiseModel::validate() const { measure.validate(); }

std::vector<double> sample_brownian(std::size_t dim, double dt, Stream& rng) {
  require(dt >= 0.0, ErrorKind::InvalidParameter, "dt must be >= 0");
  std::vector<double> out(dim, 0.0);
  if (dt == 0.0) return out;
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (auto& v : out) v = normal(rng);
  return out;
}

namespace {

void fill_bits(Stream& rng, std::vector<std::uint64_t>& bits, std::size_t n) {
  bits.resize(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = rng();
}

// Appends n jumps of one component with sorted offsets in [0, dt). The sorted
// uniforms come from normalised exponential spacings, S_i / S_{n+1}.
void append_component(std::uint32_t component, std::size_t n, double dt,
                      const simd::PowerLawParams& law, Stream& rng, std::vector<std::uint64_t>& bits,
                      std::vector<double>& spacings, std::vector<double>& marks,
                      std::vector<Jump>& out) {
  if (n == 0) return;
  fill_bits(rng, bits, n + 1);
  spacings.resize(n + 1);
  simd::exponential_variates(bits, spacings);
  double total = 0.0;
  for (double e : spacings) total += e;
  fill_bits(rng, bits, n);
  marks.resize(n);
  simd::power_law_marks(bits, marks, law);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += spacings[i];
    out.push_back({dt * (acc / total), component, marks[i]});
  }
}

void sort_by_offset(std::vector<Jump>& jumps) {
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const Jump& a, const Jump& b) { return a.offset < b.offset; });
}

}  // namespace

std::vector<Jump> sample_jumps(const JumpMeasureSpec& measure, double dt, Stream& rng) {
  measure.validate();
  require(dt >= 0.0, ErrorKind::InvalidParameter, "dt must be >= 0");
  std::vector<Jump> out;
  if (!measure.has_mass()) return out;
  const double rate = measure.intensity();
  if (dt == 0.0) return out;
  std::poisson_distribution<std::int64_t> poisson(rate * dt);
  const auto law = measure.power_law();
  std::vector<std::uint64_t> bits;
  std::vector<double> spacings, marks;
  for (std::uint32_t k = 0; k < measure.dimension; ++k) {
    const auto n = static_cast<std::size_t>(poisson(rng));
    append_component(k, n, dt, law, rng, bits, spacings, marks, out);
  }
  if (measure.dimension > 1) sort_by_offset(out);
  return out;
}

double jump_moment(const JumpMeasureSpec& measure, double p, double lo, double hi) {
  measure.validate();
  require(lo >= 0.0 && lo < hi && hi <= measure.cutoff * (1.0 + 1e-15), ErrorKind::InvalidParameter,
          "jump_moment needs 0 <= lo < hi <= cutoff");
  if (!measure.has_mass()) return 0.0;
  const double alpha = measure.alpha;
  const double two_c = 2.0 * measure.c_alpha;
  if (lo == 0.0 && p <= alpha)
    fail(ErrorKind::DivergentMoment, "|z|^p is not nu-integrable at 0 for p <= alpha");
  const double e = p - alpha;
  if (e == 0.0) return two_c * std::log(hi / lo);
  const double lo_term = lo == 0.0 ? 0.0 : std::pow(lo, e);
  return two_c * (std::pow(hi, e) - lo_term) / e;
}

JumpQuadrature jump_quadrature(const JumpMeasureSpec& measure, std::size_t nodes_per_sign, double lo,
                               double hi) {
  measure.validate();
  require(nodes_per_sign >= 1, ErrorKind::InvalidParameter, "need at least one node");
  require(lo >= 0.0 && lo < hi, ErrorKind::InvalidParameter, "jump_quadrature needs 0 <= lo < hi");
  JumpQuadrature q;
  if (!measure.has_mass()) return q;
  const GaussRule& g = gauss_legendre(nodes_per_sign);
  const double alpha = measure.alpha;
  const double c = measure.c_alpha;
  q.marks.resize(nodes_per_sign);
  q.weights.resize(nodes_per_sign);
  if (lo > 0.0) {
    const double span = std::log(hi / lo);
    for (std::size_t i = 0; i < nodes_per_sign; ++i) {
      const double z = lo * std::exp(span * g.nodes[i]);
      q.marks[i] = z;
      q.weights[i] = g.weights[i] * c * std::pow(z, -alpha) * span;
    }
  } else {
    const double gamma = 1.0 / (2.0 - alpha);
    const double scale = c * gamma * std::pow(hi, 2.0 - alpha);
    for (std::size_t i = 0; i < nodes_per_sign; ++i) {
      const double z = hi * std::pow(g.nodes[i], gamma);
      q.marks[i] = z;
      q.weights[i] = g.weights[i] * scale / (z * z);
    }
  }
  return q;
}

JumpQuadrature jump_quadrature(const JumpMeasureSpec& measure, std::size_t nodes_per_sign) {
  return jump_quadrature(measure, nodes_per_sign, measure.floor, measure.cutoff);
}

IncrementSampler::IncrementSampler(const NoiseModel& noise, double dt, bool aggregate)
    : noise_(noise), dt_(dt), aggregate_(aggregate && noise.dimension() == 1) {
  noise_.validate();
  require(dt > 0.0, ErrorKind::InvalidParameter, "dt must be > 0");
  brownian_scale_ = std::sqrt(noise_.continuous_variance() * dt);
  if (noise_.has_jumps()) {
    poisson_ = std::poisson_distribution<std::int64_t>(noise_.measure.intensity() * dt);
    power_law_ = noise_.measure.power_law();
  }
}

void IncrementSampler::sample(Stream& rng, IncrementBatch& out) {
  const std::size_t d = noise_.dimension();
  out.dt = dt_;
  out.dimension = d;
  out.aggregated = aggregate_;
  out.jumps.clear();
  out.jump_count = 0;
  out.brownian.fill(0.0);
  out.mark_sum.fill(0.0);
  if (brownian_scale_ > 0.0)
    for (std::size_t k = 0; k < d; ++k) out.brownian[k] = brownian_scale_ * normal_(rng);
  if (!noise_.has_jumps()) return;

  for (std::uint32_t k = 0; k < d; ++k) {
    const auto n = static_cast<std::size_t>(poisson_(rng));
    if (n == 0) continue;
    if (aggregate_) {
      fill_bits(rng, bits_, n);
      marks_.resize(n);
      simd::power_law_marks(bits_, marks_, power_law_);
      double sum = 0.0;
      for (double m : marks_) sum += m;
      out.mark_sum[k] += sum;
      out.jump_count += n;
    } else {
      append_component(k, n, dt_, power_law_, rng, bits_, spacings_, marks_, out.jumps);
    }
  }
  if (!aggregate_) {
    if (d > 1) sort_by_offset(out.jumps);
    out.jump_count = out.jumps.size();
  }
}

}  // namespace levyap
