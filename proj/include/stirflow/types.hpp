#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stirflow {

using cplx = std::complex<double>;
using RealVec = std::vector<double>;
using CplxVec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// One real constant per boundary component, (v_0, ..., v_m).
struct PiecewiseConstantFn {
  RealVec values;

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int j) const { return values[static_cast<size_t>(j)]; }
  double& operator[](int j) { return values[static_cast<size_t>(j)]; }
};

}  // namespace stirflow
