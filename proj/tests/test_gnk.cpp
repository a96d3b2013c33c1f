#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stirflow/fft.hpp"
#include "stirflow/gnk.hpp"

using namespace stirflow;

namespace {

PiecewiseConstantFn constant_theta(int curves, double v) { return {RealVec(static_cast<size_t>(curves), v)}; }

KernelSystem unit_disk_system(int n, double theta) {
  return KernelSystem(discretize({true, {CurveSpec::circle(0.0, 1.0)}}, n), constant_theta(1, theta));
}

DomainSpec two_stirrers() {
  return {true, {CurveSpec::circle(0.0, 1.0), CurveSpec::circle(-0.5, 0.1), CurveSpec::circle(0.5, 0.1)}};
}

RealVec random_vector(size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RealVec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Kernel straight from its definition, at arbitrary parameters on curve j.
struct ContinuousKernel {
  const DiscretizedBoundary& b;
  int j;
  double theta;
  cplx alpha;

  cplx A(const CurvePoint& p) const {
    const cplx phase = std::polar(1.0, oracle::pi / 2 - theta);
    return b.bounded() ? phase * (p.z - alpha) : phase;
  }
  cplx g(double s, double t) const {
    const CurvePoint ps = b.eval(j, s), pt = b.eval(j, t);
    return (A(ps) / A(pt)) * pt.dz / (pt.z - ps.z) / oracle::pi;
  }
  double N(double s, double t) const { return g(s, t).imag(); }
  double M1(double s, double t) const { return g(s, t).real() + 1.0 / (2 * oracle::pi * std::tan((s - t) / 2)); }
};

}  // namespace

TEST_CASE("unit disk kernel is the constant -1/(2 pi) with vanishing M1") {
  const auto sys = unit_disk_system(32, 0.0);
  for (int s = 0; s < 32; s += 3) {
    for (int t = 0; t < 32; ++t) {
      const auto k = sys.eval_kernels(s, t);
      CHECK(std::abs(k.N + 1.0 / (2 * oracle::pi)) < 1e-14);
      CHECK(std::abs(k.M1) < 1e-13);
    }
  }
}

TEST_CASE("diagonal limits agree with the numerical limit of the off-diagonal kernel") {
  struct Case {
    DomainSpec d;
    double theta;
  };
  std::vector<Case> cases = {
      {{true, {CurveSpec::ellipse({0.1, 0.05}, 3.0, 1.6, 0.3)}}, 0.7},
      {{false, {CurveSpec::ellipse({0.4, -0.2}, 1.0, 0.35, 1.1)}}, 0.2},
      {{true, {CurveSpec::circle(0.0, 1.0), CurveSpec::mobius_ellipse({0.3, 1.5}, 0.8, 0.3, 0.5)}}, 1.3},
  };
  for (const auto& c : cases) {
    KernelSystem sys(discretize(c.d, 64), constant_theta(static_cast<int>(c.d.curves.size()), c.theta));
    const int j = sys.boundary().curve_count() - 1;
    ContinuousKernel ker{sys.boundary(), j, c.theta, 0.0};
    for (int i = 0; i < 64; i += 7) {
      const int node = j * 64 + i;
      const double s = sys.boundary().t(node);
      const auto k = sys.eval_kernels(node, node);
      const double nlim = oracle::fd_limit([&](double a, double b) { return ker.N(a, b); }, s, 1e-4);
      const double mlim = oracle::fd_limit([&](double a, double b) { return ker.M1(a, b); }, s, 1e-4);
      CHECK(std::abs(k.N - nlim) <= 1e-6 * std::max(1.0, std::abs(nlim)));
      CHECK(std::abs(k.M1 - mlim) <= 1e-6 * std::max(1.0, std::abs(mlim)));
    }
  }
}

TEST_CASE("off-diagonal kernel values match the definition") {
  KernelSystem sys(discretize(two_stirrers(), 32), constant_theta(3, 0.4), cplx(0.1, 0.2));
  const auto& b = sys.boundary();
  for (int s : {0, 5, 40, 77}) {
    for (int t : {3, 33, 64, 90}) {
      if (s == t) continue;
      const cplx phase = std::polar(1.0, oracle::pi / 2 - 0.4);
      const cplx As = phase * (b.eta()[s] - cplx(0.1, 0.2)), At = phase * (b.eta()[t] - cplx(0.1, 0.2));
      const cplx g = (As / At) * b.deta()[t] / (b.eta()[t] - b.eta()[s]) / oracle::pi;
      double m1 = g.real();
      if (b.curve_of(s) == b.curve_of(t)) m1 += 1.0 / (2 * oracle::pi * std::tan((b.t(s) - b.t(t)) / 2));
      const auto k = sys.eval_kernels(s, t);
      CHECK(k.N == doctest::Approx(g.imag()).epsilon(1e-13));
      CHECK(k.M1 == doctest::Approx(m1).epsilon(1e-12));
    }
  }
}

TEST_CASE("apply_N on the unit disk") {
  const auto sys = unit_disk_system(64, 0.0);
  const RealVec ones(64, 1.0), zeros(64, 0.0);
  for (double v : sys.apply_N(ones)) CHECK(std::abs(v + 1.0) < 1e-14);
  for (double v : sys.apply_N(zeros)) CHECK(v == 0.0);
  CHECK_THROWS_AS(sys.apply_N(RealVec(63, 0.0)), Error);
  CHECK_THROWS_AS(sys.apply_M(RealVec(65, 0.0)), Error);
}

TEST_CASE("apply_M on the unit disk is minus the conjugation") {
  const auto sys = unit_disk_system(64, kPi / 2);
  RealVec c(64), s3(64);
  for (int i = 0; i < 64; ++i) {
    c[i] = std::cos(sys.boundary().t(i));
    s3[i] = std::sin(3 * sys.boundary().t(i));
  }
  const RealVec Mc = sys.apply_M(c), Ms = sys.apply_M(s3);
  for (int i = 0; i < 64; ++i) {
    CHECK(std::abs(Mc[i] + std::sin(sys.boundary().t(i))) < 1e-14);
    CHECK(std::abs(Ms[i] - std::cos(3 * sys.boundary().t(i))) < 1e-14);
  }
  for (double v : sys.apply_M(RealVec(64, 2.5))) CHECK(std::abs(v) < 1e-13);
  for (double v : sys.apply_M(RealVec(64, 0.0))) CHECK(v == 0.0);
}

TEST_CASE("constant data sees only the M1 and cross-curve parts") {
  KernelSystem sys(discretize(two_stirrers(), 32), constant_theta(3, 0.0));
  const RealVec Mrow = assemble_M(sys);
  RealVec g(96, 0.0);
  for (int i = 32; i < 64; ++i) g[i] = 1.0;  // constant on curve 1
  const RealVec out = sys.apply_M(g);
  const auto& b = sys.boundary();
  for (int s = 0; s < 96; s += 5) {
    double expect = 0.0;
    for (int t = 32; t < 64; ++t) expect += b.dt() * sys.eval_kernels(s, t).M1;
    CHECK(std::abs(out[s] - expect) < 1e-13);
  }
}

TEST_CASE("matrix-free operators equal the assembled dense matrices") {
  std::vector<std::pair<DomainSpec, double>> geoms = {
      {{true, {CurveSpec::circle(0.0, 1.0)}}, 0.0},
      {two_stirrers(), kPi / 2},
      {{false,
        {CurveSpec::ellipse(0.0, 1.0, 0.4, 0.3), CurveSpec::circle({2.0, 0.5}, 0.3),
         CurveSpec::ellipse({-1.5, -1.0}, 0.7, 0.7, 0.0)}},
       0.9},
      {{true,
        {CurveSpec::polygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}), CurveSpec::circle({0.5, 0.5}, 0.2),
         CurveSpec::circle({-0.5, -0.5}, 0.2)}},
       kPi / 2},
      {{true, {CurveSpec::circle(0.0, 1.0), CurveSpec::mobius_ellipse({0.0, 2.0}, 1.0, 0.2, 0.0)}}, 0.3},
  };
  int seed = 1;
  for (const auto& [d, theta] : geoms) {
    for (int n : {32, 128}) {
      KernelSystem sys(discretize(d, n), constant_theta(static_cast<int>(d.curves.size()), theta));
      const RealVec Nmat = assemble_N(sys), Mmat = assemble_M(sys);
      const RealVec x = random_vector(static_cast<size_t>(sys.size()), static_cast<unsigned>(seed++));
      CHECK(oracle::max_abs_diff(sys.apply_N(x), oracle::matvec(Nmat, x)) < 1e-13);
      CHECK(oracle::max_abs_diff(sys.apply_M(x), oracle::matvec(Mmat, x)) < 1e-13);
    }
  }
}

TEST_CASE("far curves interact smoothly and match the dense product") {
  DomainSpec d{false, {CurveSpec::circle(0.0, 0.5), CurveSpec::circle(5.0, 0.5)}};
  KernelSystem sys(discretize(d, 64), constant_theta(2, kPi / 2));
  RealVec mu(128, 0.0);
  for (int i = 0; i < 64; ++i) mu[i] = std::cos(sys.boundary().t(i)) + 0.3;
  const RealVec out = sys.apply_N(mu);
  const RealVec ref = oracle::matvec(assemble_N(sys), mu);
  for (int i = 64; i < 128; ++i) CHECK(std::abs(out[i] - ref[i]) < 1e-14);
  // smooth: spectral coefficients on curve 2 decay fast
  CplxVec block(out.begin() + 64, out.end()), coef(64);
  fft::forward(block, coef);
  CHECK(std::abs(coef[32]) < 1e-12);
}

TEST_CASE("homogeneous data gives the trivial solution") {
  KernelSystem sys(discretize(two_stirrers(), 64), constant_theta(3, kPi / 2));
  const auto sol = solve_theorem1(sys, RealVec(192, 0.0));
  for (double v : sol.mu) CHECK(v == 0.0);
  for (double v : sol.h.values) CHECK(v == 0.0);
  for (cplx v : sol.f_boundary) CHECK(v == cplx{});
}

TEST_CASE("unit disk with A = eta and gamma = sin t") {
  const auto sys = unit_disk_system(64, kPi / 2);
  RealVec g(64);
  for (int i = 0; i < 64; ++i) g[i] = std::sin(sys.boundary().t(i));
  const auto sol = solve_theorem1(sys, g);
  CHECK(std::abs(sol.h[0]) < 1e-14);
  for (int i = 0; i < 64; ++i) {
    CHECK(std::abs(sol.f_boundary[i] + kI) < 1e-13);
    CHECK(std::abs(sol.mu[i] + std::cos(sys.boundary().t(i))) < 1e-13);
  }
}

TEST_CASE("exterior of a circle: f = i a^2 / z") {
  const double a = 0.7;
  KernelSystem sys(discretize({false, {CurveSpec::circle(0.0, a)}}, 64), constant_theta(1, kPi / 2));
  RealVec g(64);
  for (int i = 0; i < 64; ++i) g[i] = -a * std::sin(sys.boundary().t(i));
  const auto sol = solve_theorem1(sys, g);
  CHECK(std::abs(sol.h[0]) < 1e-14);
  for (int i = 0; i < 64; ++i) {
    const cplx z = sys.boundary().eta()[i];
    CHECK(std::abs(sol.f_boundary[i] - kI * a * a / z) < 1e-13);
    CHECK(std::abs(sol.mu[i] - a * std::cos(sys.boundary().t(i))) < 1e-13);
  }
}

TEST_CASE("Riemann-Hilbert residual and imaginary-part consistency") {
  DomainSpec d{true,
               {CurveSpec::ellipse(0.0, 2.4, 2.0, 0.0), CurveSpec::circle({0.5, 0.2}, 0.15),
                CurveSpec::ellipse({-0.4, -0.3}, 0.5, 0.2, 0.6)}};
  KernelSystem sys(discretize(d, 256), PiecewiseConstantFn{{0.3, 1.0, -0.4}}, cplx(0.05, 0.05));
  const auto& b = sys.boundary();
  RealVec g(static_cast<size_t>(b.size()));
  for (int i = 0; i < b.size(); ++i) g[i] = std::real(std::exp(b.eta()[i])) + b.curve_of(i);
  SolverOptions opts;
  const auto sol = solve_theorem1(sys, g, opts);
  CHECK(sol.residual <= opts.gmres_tol);
  for (int i = 0; i < b.size(); ++i) {
    const cplx Af = sys.A()[i] * sol.f_boundary[i];
    CHECK(std::abs(Af.real() - g[i] - sol.h[b.curve_of(i)]) <= 10 * opts.gmres_tol * (1 + std::abs(g[i])));
    CHECK(std::abs(Af.imag() - sol.mu[i]) <= 1e-15 * (1 + std::abs(sol.mu[i])));
  }
  for (double dev : sol.h_deviation) CHECK(dev < 1e-10);
}

TEST_CASE("graded square recovers an analytic function") {
  const DomainSpec d{true, {CurveSpec::polygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})}};
  double prev = 1.0;
  for (int n : {64, 256, 1024}) {
    KernelSystem sys(discretize(d, n, 3.0), constant_theta(1, kPi / 2));
    CHECK(sys.graded(0));
    const auto& b = sys.boundary();
    RealVec g(static_cast<size_t>(n));
    CplxVec exact(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      exact[i] = 1.0 / (b.eta()[i] - 3.0) + kI * b.eta()[i];
      g[i] = (sys.A()[i] * exact[i]).real();
    }
    const auto sol = solve_theorem1(sys, g);
    const double err = oracle::max_abs_diff(sol.f_boundary, exact);
    CHECK(err < prev / 20);
    CHECK(std::abs(sol.h[0]) < 10 * err);
    prev = err;
  }
  CHECK(prev < 1e-7);
}

TEST_CASE("GMRES failure is reported with the achieved residual") {
  KernelSystem sys(discretize(two_stirrers(), 64), constant_theta(3, kPi / 2));
  RealVec g(192);
  for (int i = 0; i < 192; ++i) g[i] = std::cos(3.0 * i);
  SolverOptions opts;
  opts.max_iterations = 2;
  try {
    solve_theorem1(sys, g, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations == 2);
    CHECK(e.residual > opts.gmres_tol);
  }
  g[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_theorem1(sys, g), Error);
}

TEST_CASE("GMRES iteration counts are nearly mesh independent") {
  std::vector<int> its;
  for (int n : {256, 512, 1024}) {
    KernelSystem sys(discretize(two_stirrers(), n), constant_theta(3, kPi / 2));
    const auto& b = sys.boundary();
    RealVec g(static_cast<size_t>(b.size()));
    for (int i = 0; i < b.size(); ++i) g[i] = b.eta()[i].imag() * (b.curve_of(i) == 1) - b.eta()[i].real() * (b.curve_of(i) == 2);
    its.push_back(solve_theorem1(sys, g).gmres_iterations);
  }
  MESSAGE("iterations: " << its[0] << " " << its[1] << " " << its[2]);
  CHECK(*std::max_element(its.begin(), its.end()) - *std::min_element(its.begin(), its.end()) <= 2);
}

TEST_CASE("cauchy evaluation of closed-form data") {
  {
    const auto sys = unit_disk_system(256, kPi / 2);
    const CplxVec fconst(256, -kI);
    CHECK(std::abs(cauchy_eval(sys, fconst, std::vector<cplx>{0.0})[0] + kI) < 1e-14);
    CplxVec fid(sys.boundary().eta());
    const cplx z(0.3, 0.4);
    CHECK(std::abs(cauchy_eval(sys, fid, std::vector<cplx>{z})[0] - z) < 1e-12);
    CHECK_THROWS_AS(cauchy_eval(sys, fid, std::vector<cplx>{1.5}), GeometryError);
    CHECK_THROWS_AS(cauchy_eval(sys, fid, std::vector<cplx>{1.0}), GeometryError);
  }
  {
    const double a = 0.4;
    KernelSystem sys(discretize({false, {CurveSpec::circle(0.0, a)}}, 256), constant_theta(1, kPi / 2));
    CplxVec f(256);
    for (int i = 0; i < 256; ++i) f[i] = kI * a * a / sys.boundary().eta()[i];
    const auto v = cauchy_eval_with_derivative(sys, f, std::vector<cplx>{2 * a, cplx(0.3, -0.9)});
    CHECK(std::abs(v.f[0] - kI * a / 2.0) < 1e-12);
    const cplx z(0.3, -0.9);
    CHECK(std::abs(v.f[1] - kI * a * a / z) < 1e-12);
    CHECK(std::abs(v.df[1] + kI * a * a / (z * z)) < 1e-12);
  }
}

TEST_CASE("solved boundary values continue analytically into the domain") {
  DomainSpec d{false, {CurveSpec::ellipse(0.0, 1.0, 0.5, 0.2), CurveSpec::circle({1.5, 0.3}, 0.3)}};
  KernelSystem sys(discretize(d, 256), constant_theta(2, kPi / 2));
  const auto& b = sys.boundary();
  RealVec g(static_cast<size_t>(b.size()));
  for (int i = 0; i < b.size(); ++i) g[i] = std::real(-kI * std::conj(cplx(0.6, 0.8)) * b.eta()[i]) * (b.curve_of(i) == 0);
  const auto sol = solve_theorem1(sys, g);
  // finer sampling of the same curves, pulled 1e-9 into the fluid
  double err = 0.0;
  for (int j = 0; j < 2; ++j) {
    fft::TrigInterpolant interp(std::span<const cplx>(sol.f_boundary).subspan(static_cast<size_t>(j) * 256, 256));
    std::vector<cplx> targets;
    std::vector<cplx> expect;
    for (int k = 0; k < 1024; k += 3) {
      const double t = kTwoPi * (k + 0.5) / 1024;
      const CurvePoint p = b.eval(j, t);
      targets.push_back(p.z + 1e-9 * kI * p.dz / std::abs(p.dz));
      expect.push_back(interp(t));
    }
    const auto got = cauchy_eval_with_derivative(sys, sol.f_boundary, targets, false).f;
    err = std::max(err, oracle::max_abs_diff(got, expect));
  }
  CHECK(err < 1e-6);
}
