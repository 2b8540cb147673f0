#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace levyap {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Upper bound on the number of independent driving components d.
inline constexpr std::size_t kMaxDrivers = 4;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr double operator[](std::size_t i) const { return i == 0 ? x : y; }
  constexpr double& operator[](std::size_t i) { return i == 0 ? x : y; }

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

// Row-major 2x2 matrix.
struct Mat2 {
  double xx = 0.0, xy = 0.0;
  double yx = 0.0, yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 zero() { return {}; }

  constexpr double operator()(std::size_t i, std::size_t j) const {
    return i == 0 ? (j == 0 ? xx : xy) : (j == 0 ? yx : yy);
  }
  constexpr double det() const { return xx * yy - xy * yx; }

  constexpr Mat2& operator+=(const Mat2& o) {
    xx += o.xx;
    xy += o.xy;
    yx += o.yx;
    yy += o.yy;
    return *this;
  }
  constexpr Mat2& operator*=(double s) {
    xx *= s;
    xy *= s;
    yx *= s;
    yy *= s;
    return *this;
  }
};

constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }
constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y};
}
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
          a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
}

// Wraps an angle to [0, 2pi).
inline double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

enum class ErrorKind {
  InvalidParameter,
  InvalidMeasure,
  DivergentMoment,
  FlowEscape,
  ExitDetected,
  CriticalPoint,
  QuadratureFailure,
  AllTrajectoriesExited,
  EmptyMeasure,
  InvalidGrid,
  DegenerateNullspace,
  NonPositiveEstimate,
  Config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InvalidMeasure: return "InvalidMeasure";
    case ErrorKind::DivergentMoment: return "DivergentMoment";
    case ErrorKind::FlowEscape: return "FlowEscape";
    case ErrorKind::ExitDetected: return "ExitDetected";
    case ErrorKind::CriticalPoint: return "CriticalPoint";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::AllTrajectoriesExited: return "AllTrajectoriesExited";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::DegenerateNullspace: return "DegenerateNullspace";
    case ErrorKind::NonPositiveEstimate: return "NonPositiveEstimate";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace levyap
