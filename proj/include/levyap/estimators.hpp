#pragma once

// Top Lyapunov exponent estimators:
//   direct      - growth of the linearised tangent vector,
//   khasminskii - time average of the rho-drift along (x, theta),
//   theorem33   - eps^(2/3) times the Sigma0 average over an occupation measure,
// and the log-log scaling sweep over eps.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "levyap/frame.hpp"
#include "levyap/marcus.hpp"
#include "levyap/noise.hpp"

namespace levyap {

struct RunSettings {
  double horizon = 100.0;
  double burn_in = 0.1;  // fraction of the horizon excluded from averages
  std::size_t replicates = 16;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t renorm_interval = 10;  // steps
  double beta = 2.0 / 3.0;
  Vec2 x0{1.0, 0.0};
  Vec2 v0{1.0, 1.0};
  StepperConfig stepper;
  std::size_t quadrature_nodes = 32;  // nu-quadrature nodes per sign
  std::size_t max_attempts = 3;       // per replicate, including the first
  // Occupation measure collected by the khasminskii route.
  bool collect_occupation = false;
  std::size_t theta_bins = 256;
  std::size_t x_bins = 8;  // per axis, ignored for homogeneous systems

  void validate() const;
};

struct LyapunovEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::string method;
  double epsilon = 0.0;
  double beta = 0.0;
  double horizon = 0.0;
  std::size_t replicates = 0;  // contributing replicates
  std::size_t restarts = 0;
  bool unreliable = false;
  std::size_t renorm_interval = 0;
  std::vector<double> per_replicate;
  // direct only: the same growth rate measured on frame coordinates w and on
  // their rescaling T w.
  double value_frame = 0.0;
  double value_pw = 0.0;
  // khasminskii only: time average of the martingale part of rho.
  double martingale_mean = 0.0;
  double martingale_std_error = 0.0;
};

// Normalised histogram over (x box) x (theta bins); theta bins only when the
// box has a single cell.
class OccupationMeasure {
 public:
  OccupationMeasure() = default;
  OccupationMeasure(std::size_t theta_bins, std::size_t nx, std::size_t ny, Vec2 lo, Vec2 hi);
  static OccupationMeasure theta_only(std::size_t theta_bins);

  void add(const Vec2& x, double theta, double weight = 1.0);
  void merge(const OccupationMeasure& other);
  void normalize();

  std::size_t theta_bins() const { return nt_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  bool theta_only_measure() const { return nx_ == 1 && ny_ == 1; }
  std::size_t size() const { return mass_.size(); }
  double mass(std::size_t bin) const { return mass_[bin]; }
  double total() const;
  // Bin index = (ix * ny + iy) * theta_bins + it.
  Vec2 x_center(std::size_t bin) const;
  double theta_center(std::size_t bin) const;
  void set_mass(std::size_t bin, double m) { mass_[bin] = m; }

 private:
  std::size_t nt_ = 0, nx_ = 1, ny_ = 1;
  Vec2 lo_, hi_;
  std::vector<double> mass_;
};

// Bounding box of the unperturbed orbit through x0, padded by half its size.
void orbit_box(const SystemModel& system, const Vec2& x0, Vec2& lo, Vec2& hi);

LyapunovEstimate lyapunov_direct(const SystemModel& system, const NoiseModel& noise, double eps,
                                 const RunSettings& settings);

// `occupation`, when non-null and settings.collect_occupation is set, receives
// the merged, normalised occupation measure of (x, theta).
LyapunovEstimate lyapunov_khasminskii(const SystemModel& system, const NoiseModel& noise,
                                      double eps, const RunSettings& settings,
                                      OccupationMeasure* occupation = nullptr);

// eps^(2/3) sum_bins mass * Sigma0(bin centre). Throws EmptyMeasure.
double lyapunov_theorem33(const SystemModel& system, const NoiseModel& noise, double eps,
                          const OccupationMeasure& occupation, const Sigma0Options& opts = {},
                          std::size_t threads = 1);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log residuals
  std::size_t points = 0;
};

// Least squares of log(value) on log(eps) over the positive values; throws
// NonPositiveEstimate when fewer than three remain.
LogLogFit fit_loglog(const std::vector<double>& eps, const std::vector<double>& values);

struct SweepResult {
  std::vector<double> epsilons;
  std::vector<LyapunovEstimate> estimates;
  std::vector<bool> excluded;  // non-positive estimates left out of the fit
  LogLogFit fit;
};

using EstimatorFn = std::function<LyapunovEstimate(double eps)>;

// At least four strictly increasing positive eps spanning a factor >= 4.
void validate_sweep_epsilons(const std::vector<double>& eps);
SweepResult scaling_sweep(const std::vector<double>& eps, const EstimatorFn& estimator);
SweepResult scaling_sweep(const SystemModel& system, const NoiseModel& noise,
                          const std::vector<double>& eps, const RunSettings& settings);

}  // namespace levyap
