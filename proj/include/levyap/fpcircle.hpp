#pragma once

// Stationary Fokker-Planck problem on the circle for the angle of the
// nilpotent system, and the Lyapunov exponent as a quadrature against its
// stationary density.

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "levyap/noise.hpp"

namespace levyap {

struct CircleGrid {
  std::size_t n = 0;
  double h = 0.0;
  std::vector<double> nodes;  // 2 pi j / n
};

// n >= 16 and even, otherwise InvalidGrid.
CircleGrid make_circle_grid(std::size_t n);

enum class GeneratorVariant {
  Plain,  // generator of theta itself, jumps kept nonlocal
  PW,     // leading-order generator of the rescaled angle, jumps folded into the diffusion
};

const char* to_string(GeneratorVariant v);
GeneratorVariant parse_generator_variant(const std::string& s);

struct NilpotentFPParams {
  double a = 1.0;
  double sigma = 1.0;
  double eps = 0.1;
  NoiseModel noise;
  std::size_t nodes_per_sign = 32;
};

struct GeneratorMatrix {
  Eigen::MatrixXd G;
  GeneratorVariant variant = GeneratorVariant::Plain;
  CircleGrid grid;
};

// Periodic cubic spline through grid values, as weights on the grid values.
class PeriodicSpline {
 public:
  explicit PeriodicSpline(const CircleGrid& grid);
  // Adds scale * (interpolation weights at phi) to `row`.
  void accumulate(double phi, double scale, double* row) const;

 private:
  CircleGrid grid_;
  Eigen::MatrixXd moments_;  // second derivatives as a linear map of values
};

// Local part f -> drift f' + diffusion f'' with fourth-order periodic central
// differences.
GeneratorMatrix local_generator(const CircleGrid& grid, const std::vector<double>& drift,
                                const std::vector<double>& diffusion);

GeneratorMatrix build_generator(const NilpotentFPParams& params, const CircleGrid& grid,
                                GeneratorVariant variant, std::size_t threads = 1);

struct CircleDensity {
  CircleGrid grid;
  std::vector<double> values;
  double residual = 0.0;      // sup norm of G^T mu
  double clipped_mass = 0.0;  // mass removed by clipping negative values
  std::size_t nullity = 0;
};

// mu with G^T mu = 0 and h sum mu = 1. A null vector of the form (-1)^j is a
// centred-difference artefact and is discounted; any other nullspace
// dimension than one raises DegenerateNullspace.
CircleDensity solve_stationary(const GeneratorMatrix& gen);

// int zeta2(z)(theta) nu(dz) for the unscaled angle.
double jump_log_integral(const NilpotentFPParams& params, double theta);

// Plain: h sum Q mu with Q = a s c + q eps^2 sigma^2 (c^2/2 - s^2 c^2) + int zeta2 nu.
// PW: eps^(2/3) h sum Q~ mu with Q~ = a s c + sigma^2 (q + m2)(c^2/2 - s^2 c^2).
double lyapunov_quadrature(const CircleDensity& mu, const NilpotentFPParams& params,
                           GeneratorVariant variant);

// Sup norm over the grid of cos^2(theta) times the adjoint operator applied
// to mu, evaluated independently of the matrix transpose (plain variant).
double adjoint_residual(const CircleDensity& mu, const NilpotentFPParams& params);

void write_density_csv(std::ostream& os, const CircleDensity& mu);

}  // namespace levyap
