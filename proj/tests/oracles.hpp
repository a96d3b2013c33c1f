#pragma once

// Closed-form solutions and brute-force helpers shared by the tests. Nothing
// here calls into the solver paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<double> matvec(const std::vector<double>& mat, std::span<const double> x) {
  const size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    long double s = 0.0;
    for (size_t j = 0; j < n; ++j) s += static_cast<long double>(mat[i * n + j]) * x[j];
    y[i] = static_cast<double>(s);
  }
  return y;
}

// Moving cylinder of radius a at the origin, complex velocity U: w = -a^2 U / z.
inline cplx dipole_w(double a, cplx U, cplx z) { return -a * a * U / z; }
inline cplx dipole_dw(double a, cplx U, cplx z) { return a * a * U / (z * z); }

// Joukowski map of the exterior of |z| = R onto the plane minus [-2R, 2R].
inline cplx joukowski(double R, cplx z) { return z + R * R / z; }
inline cplx joukowski_inv(double R, cplx w) {
  const cplx s = std::sqrt(w - 2.0 * R) * std::sqrt(w + 2.0 * R);
  const cplx z1 = 0.5 * (w + s), z2 = 0.5 * (w - s);
  return std::abs(z1) >= std::abs(z2) ? z1 : z2;
}

// Central finite-difference limit of a kernel along its second argument.
template <class F>
double fd_limit(F kernel, double s, double h) {
  return 0.5 * (kernel(s, s + h) + kernel(s, s - h));
}

}  // namespace oracle
