#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stirflow/gmres.hpp"

using namespace stirflow;

namespace {

// Gaussian elimination with partial pivoting, long double.
RealVec direct_solve(RealVec a, RealVec b) {
  const size_t n = b.size();
  std::vector<long double> m(a.begin(), a.end()), r(b.begin(), b.end());
  for (size_t k = 0; k < n; ++k) {
    size_t p = k;
    for (size_t i = k + 1; i < n; ++i)
      if (std::abs(m[i * n + k]) > std::abs(m[p * n + k])) p = i;
    for (size_t j = 0; j < n; ++j) std::swap(m[k * n + j], m[p * n + j]);
    std::swap(r[k], r[p]);
    for (size_t i = k + 1; i < n; ++i) {
      const long double f = m[i * n + k] / m[k * n + k];
      for (size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
      r[i] -= f * r[k];
    }
  }
  RealVec x(n);
  for (size_t i = n; i-- > 0;) {
    long double s = r[i];
    for (size_t j = i + 1; j < n; ++j) s -= m[i * n + j] * x[j];
    x[i] = static_cast<double>(s / m[i * n + i]);
  }
  return x;
}

LinearOperator dense_op(const RealVec& a) {
  return [&a](std::span<const double> in, std::span<double> out) {
    const auto y = oracle::matvec(a, in);
    std::copy(y.begin(), y.end(), out.begin());
  };
}

RealVec identity_plus_random(size_t n, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealVec a(n * n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) a[i * n + j] = (i == j) + scale * g(rng) / std::sqrt(double(n));
  return a;
}

}  // namespace

TEST_CASE("nonsymmetric system matches a direct solve") {
  const size_t n = 60;
  const RealVec a = identity_plus_random(n, 0.5, 11);
  RealVec b(n);
  for (size_t i = 0; i < n; ++i) b[i] = std::sin(1.0 + i);
  const auto r = gmres(dense_op(a), b, 1e-14, 100);
  CHECK(r.converged);
  CHECK(r.residual <= 1e-14);
  CHECK(r.history.size() == static_cast<size_t>(r.iterations));
  CHECK(oracle::max_abs_diff(r.x, direct_solve(a, b)) < 1e-12);
}

TEST_CASE("symmetric positive definite system") {
  const size_t n = 40;
  RealVec a(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    a[i * n + i] = 4.0;
    if (i > 0) a[i * n + i - 1] = a[(i - 1) * n + i] = -1.0;
  }
  const RealVec b(n, 1.0);
  const auto r = gmres(dense_op(a), b, 1e-13, 100);
  CHECK(r.converged);
  CHECK(oracle::max_abs_diff(r.x, direct_solve(a, b)) < 1e-12);
}

TEST_CASE("zero right-hand side returns zero immediately") {
  const RealVec a = identity_plus_random(10, 0.3, 2);
  const auto r = gmres(dense_op(a), RealVec(10, 0.0), 1e-14, 50);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  for (double v : r.x) CHECK(v == 0.0);
}

TEST_CASE("identity converges in one step") {
  const auto r = gmres([](std::span<const double> in, std::span<double> out) { std::copy(in.begin(), in.end(), out.begin()); },
                       RealVec{1.0, 2.0, 3.0}, 1e-14, 10);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.x[2] == doctest::Approx(3.0));
}

TEST_CASE("iteration cap is reported as non-convergence") {
  const RealVec a = identity_plus_random(80, 2.0, 5);
  RealVec b(80, 1.0);
  const auto r = gmres(dense_op(a), b, 1e-14, 3);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.residual > 1e-14);
  // residual history is non-increasing
  for (size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1] + 1e-15);
}
