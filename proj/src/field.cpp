#include "stirflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stirflow {

namespace {

bool is_obstacle(const DiscretizedBoundary& b, int j) { return !b.bounded() || j > 0; }

template <class T>
std::vector<T> per_curve(const std::vector<T>& v, int curves, const char* what) {
  if (v.empty()) return std::vector<T>(static_cast<size_t>(curves), T{});
  if (v.size() != static_cast<size_t>(curves))
    throw Error(std::string("stirrer problem: ") + what + " needs one entry per curve (" + std::to_string(curves) +
                "), got " + std::to_string(v.size()));
  return v;
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int q, RealVec& x, RealVec& w) {
  x.assign(static_cast<size_t>(q), 0.0);
  w.assign(static_cast<size_t>(q), 0.0);
  for (int i = 0; i < q; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (q + 0.5)), dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<size_t>(i)] = z;
    w[static_cast<size_t>(i)] = 2.0 / ((1 - z * z) * dp * dp);
  }
}

struct Contour {
  CplxVec z, dz;  // points and weights, traversed with the fluid on the left
};

// Curve j pushed a distance delta into the fluid.
Contour offset_contour(const DiscretizedBoundary& b, int j, double delta) {
  Contour c;
  const CurveSpec& spec = b.spec(j);
  if (spec.kind == CurveKind::polygon) {
    std::vector<cplx> v = spec.vertices;
    if (b.reversed(j)) std::reverse(v.begin(), v.end());
    const size_t nv = v.size();
    std::vector<cplx> off(nv);
    for (size_t k = 0; k < nv; ++k) {
      const cplx d1 = (v[k] - v[(k + nv - 1) % nv]) / std::abs(v[k] - v[(k + nv - 1) % nv]);
      const cplx d2 = (v[(k + 1) % nv] - v[k]) / std::abs(v[(k + 1) % nv] - v[k]);
      const cplx n1 = kI * d1, n2 = kI * d2;
      off[k] = v[k] + delta * (n1 + n2) / (1.0 + (n1 * std::conj(n2)).real());
    }
    RealVec gx, gw;
    gauss_legendre(16, gx, gw);
    for (size_t k = 0; k < nv; ++k) {
      const cplx p = off[k], q = off[(k + 1) % nv];
      const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(q - p) / (2 * delta))));
      for (int s = 0; s < panels; ++s) {
        const cplx a = p + (q - p) * (double(s) / panels), e = p + (q - p) * (double(s + 1) / panels);
        for (size_t g = 0; g < gx.size(); ++g) {
          c.z.push_back(0.5 * (a + e) + 0.5 * (e - a) * gx[g]);
          c.dz.push_back(0.5 * (e - a) * gw[g]);
        }
      }
    }
    return c;
  }
  const int M = 4 * b.n();
  const double h = kTwoPi / M;
  for (int k = 0; k < M; ++k) {
    const CurvePoint p = b.eval(j, h * k);
    const cplx tau = p.dz / std::abs(p.dz);
    c.z.push_back(p.z + delta * kI * tau);
    c.dz.push_back(h * (p.dz - delta * tau * std::imag(p.d2z / p.dz)));
  }
  return c;
}

double offset_distance(const DiscretizedBoundary& b, int j) {
  const auto eta = b.curve_eta(j);
  const int n = b.n();
  double spacing = 0.0, xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int i = 0; i < n; ++i) {
    spacing = std::max(spacing, std::abs(eta[(i + 1) % n] - eta[i]));
    xmin = std::min(xmin, eta[i].real());
    xmax = std::max(xmax, eta[i].real());
    ymin = std::min(ymin, eta[i].imag());
    ymax = std::max(ymax, eta[i].imag());
  }
  const double size = std::hypot(xmax - xmin, ymax - ymin);
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < b.curve_count(); ++k) {
    if (k == j) continue;
    for (cplx z : b.curve_eta(k)) {
      // cheap reject against the bounding box
      const double dx = std::max({xmin - z.real(), z.real() - xmax, 0.0});
      const double dy = std::max({ymin - z.imag(), z.imag() - ymax, 0.0});
      if (std::hypot(dx, dy) >= gap) continue;
      for (cplx e : eta) gap = std::min(gap, std::abs(z - e));
    }
  }
  return std::min({5 * spacing, 0.25 * size, 0.4 * gap});
}

}  // namespace

StirrerProblem resolve_problem(const StirrerProblem& p, const DiscretizedBoundary& b) {
  const int nc = b.curve_count();
  if (!p.domain.curves.empty() && p.domain.curves.size() != static_cast<size_t>(nc))
    throw Error("stirrer problem: domain has " + std::to_string(p.domain.curves.size()) +
                " curves but the discretization has " + std::to_string(nc));
  StirrerProblem r = p;
  r.U = per_curve(p.U, nc, "U");
  r.chi = per_curve(p.chi, nc, "chi");
  r.anchors = per_curve(p.anchors, nc, "anchors");
  if (b.bounded()) {
    r.U[0] = 0.0;
    r.chi[0] = 0.0;
  }
  for (double c : r.chi)
    if (!std::isfinite(c)) throw Error("stirrer problem: non-finite circulation");
  for (cplx u : r.U)
    if (!std::isfinite(std::abs(u))) throw Error("stirrer problem: non-finite velocity");

  PointLocator loc(b);
  for (int j = 0; j < nc; ++j) {
    if (!is_obstacle(b, j)) {
      r.anchors[static_cast<size_t>(j)] = 0.0;
      continue;
    }
    const bool given = !p.anchors.empty();
    if (p.anchors.empty()) r.anchors[static_cast<size_t>(j)] = b.centroid(j);
    if (!given && r.chi[static_cast<size_t>(j)] == 0.0) continue;
    const cplx a = r.anchors[static_cast<size_t>(j)];
    if (loc.winding(j, a) == 0 || loc.distance(j, a) <= 1e-12 * (1 + std::abs(a)))
      throw GeometryError("stirrer problem: anchor of curve " + std::to_string(j) +
                          " is not strictly inside the curve");
  }
  if (b.bounded() && !loc(r.alpha).is_fluid()) throw GeometryError("stirrer problem: alpha must lie in the fluid");
  return r;
}

RealVec build_rhs(const StirrerProblem& p, const DiscretizedBoundary& b, std::span<const cplx> image) {
  const StirrerProblem r = resolve_problem(p, b);
  if (!image.empty() && image.size() != static_cast<size_t>(b.size()))
    throw Error("build_rhs: image length does not match the boundary");
  RealVec g(static_cast<size_t>(b.size()));
  for (int i = 0; i < b.size(); ++i) {
    const int j = b.curve_of(i);
    const cplx X = image.empty() ? b.eta()[i] : image[static_cast<size_t>(i)];
    const cplx U = r.U[static_cast<size_t>(j)];
    // U = 0 curves may have an infinite image (pole of the half-plane map)
    double v = U == cplx{} ? 0.0 : std::real(-kI * std::conj(U) * X);
    for (int k = 0; k < b.curve_count(); ++k) {
      const double c = r.chi[static_cast<size_t>(k)];
      if (c != 0.0) v += c / kTwoPi * std::log(std::abs(b.eta()[i] - r.anchors[static_cast<size_t>(k)]));
    }
    g[static_cast<size_t>(i)] = v;
  }
  return g;
}

double BCResidual::max() const {
  double m = 0.0;
  for (double v : per_curve) m = std::max(m, v);
  return m;
}

FlowSolution::FlowSolution(StirrerProblem problem, std::shared_ptr<const KernelSystem> sys, RHSolution rh)
    : problem_(std::move(problem)), sys_(std::move(sys)), rh_(std::move(rh)) {}

FlowSolution::Values FlowSolution::evaluate(std::span<const cplx> targets, bool check) const {
  CauchyValues cv = cauchy_eval_with_derivative(*sys_, rh_.f_boundary, targets, check);
  Values out;
  out.w.resize(targets.size());
  out.dw.resize(targets.size());
  const cplx inv2pii = 1.0 / (kTwoPi * kI);
  for (size_t i = 0; i < targets.size(); ++i) {
    const cplx z = targets[i];
    cplx w = kI * Pi(z) * cv.f[i];
    cplx dw = kI * dPi() * cv.f[i] + kI * Pi(z) * cv.df[i];
    for (size_t k = 0; k < problem_.chi.size(); ++k) {
      const double c = problem_.chi[k];
      if (c == 0.0) continue;
      w += c * inv2pii * std::log(z - problem_.anchors[k]);
      dw += c * inv2pii / (z - problem_.anchors[k]);
    }
    out.w[i] = w;
    out.dw[i] = dw;
  }
  return out;
}

CplxVec FlowSolution::potential_at(std::span<const cplx> targets) const { return evaluate(targets).w; }

CplxVec FlowSolution::velocity_at(std::span<const cplx> targets) const {
  CplxVec v = evaluate(targets).dw;
  for (auto& x : v) x = std::conj(x);
  return v;
}

cplx FlowSolution::contour_integral(int j) const {
  const DiscretizedBoundary& b = boundary();
  if (j < 0 || j >= b.curve_count()) throw Error("contour_integral: curve index out of range");
  if (!is_obstacle(b, j)) throw Error("contour_integral: curve 0 is the vessel; pick a stirrer");
  PointLocator loc(b);
  double delta = offset_distance(b, j);
  for (int attempt = 0; attempt < 6; ++attempt, delta *= 0.5) {
    const Contour c = offset_contour(b, j, delta);
    bool ok = true;
    for (cplx z : c.z) {
      if (!loc(z).is_fluid()) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    const Values v = evaluate(c.z, false);
    cplx sum = 0.0;
    for (size_t k = 0; k < c.z.size(); ++k) sum += v.dw[k] * c.dz[k];
    // obstacles are traversed clockwise; report the counterclockwise integral
    return -sum;
  }
  throw GeometryError("contour_integral: offset contour around curve " + std::to_string(j) + " leaves the fluid");
}

BCResidual FlowSolution::bc_residual() const {
  return bc_residual([this](int j, double t) { return boundary().eval(j, t).z; });
}

BCResidual FlowSolution::bc_residual(const std::function<cplx(int, double)>& image) const {
  const DiscretizedBoundary& b = boundary();
  const int n = b.n(), nc = b.curve_count();
  std::vector<cplx> z(static_cast<size_t>(b.size())), X(z.size());
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) * b.dt();
      z[static_cast<size_t>(j) * n + i] = b.eval(j, t).z;
      X[static_cast<size_t>(j) * n + i] = image(j, t);
    }
  }
  const Values v = evaluate(z, false);
  BCResidual r;
  r.per_curve.assign(static_cast<size_t>(nc), 0.0);
  r.h_deviation = rh_.h_deviation;
  for (size_t k = 0; k < z.size(); ++k) {
    const int j = static_cast<int>(k) / n;
    const double lhs = std::real(-kI * v.w[k]);
    const cplx U = problem_.U[static_cast<size_t>(j)];
    const double rhs = (U == cplx{} ? 0.0 : std::real(-kI * std::conj(U) * X[k])) + rh_.h[j];
    double& slot = r.per_curve[static_cast<size_t>(j)];
    const double e = std::abs(lhs - rhs);
    slot = std::isfinite(e) ? std::max(slot, e) : std::numeric_limits<double>::infinity();
  }
  return r;
}

FlowSolution solve_flow(const StirrerProblem& p, const DiscretizedBoundary& b, const SolverOptions& opts) {
  return solve_flow(p, b, {}, opts);
}

FlowSolution solve_flow(const StirrerProblem& p, const DiscretizedBoundary& b, std::span<const cplx> image,
                        const SolverOptions& opts) {
  StirrerProblem r = resolve_problem(p, b);
  const RealVec gamma = build_rhs(r, b, image);
  PiecewiseConstantFn theta{RealVec(static_cast<size_t>(b.curve_count()), kPi / 2)};
  auto sys = std::make_shared<const KernelSystem>(b, theta, r.alpha, opts.backend, opts.tree);
  RHSolution rh = solve_theorem1(*sys, gamma, opts);
  return FlowSolution(std::move(r), std::move(sys), std::move(rh));
}

size_t FieldGrid::fluid_count() const {
  return static_cast<size_t>(std::count(mask.begin(), mask.end(), Location::fluid));
}

FieldGrid streamfunction_grid(const FlowSolution& sol, const GridSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw Error("streamfunction_grid: empty grid");
  FieldGrid g;
  g.spec = spec;
  const size_t total = static_cast<size_t>(spec.nx) * spec.ny;
  g.mask.assign(total, Location::fluid);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  g.psi.assign(total, nan);
  g.phi.assign(total, nan);
  g.u.assign(total, nan);
  g.v.assign(total, nan);

  PointLocator loc(sol.boundary());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long c = 0; c < static_cast<long long>(total); ++c) {
    const int i = static_cast<int>(c % spec.nx), k = static_cast<int>(c / spec.nx);
    g.mask[static_cast<size_t>(c)] = loc(cplx(spec.x(i), spec.y(k))).where;
  }
  std::vector<cplx> targets;
  std::vector<size_t> where;
  for (size_t c = 0; c < total; ++c) {
    if (g.mask[c] != Location::fluid) continue;
    targets.emplace_back(spec.x(static_cast<int>(c % spec.nx)), spec.y(static_cast<int>(c / spec.nx)));
    where.push_back(c);
  }
  if (targets.empty()) throw GeometryError("streamfunction_grid: no grid point lies in the fluid");
  const FlowSolution::Values v = sol.evaluate(targets, false);
  for (size_t q = 0; q < targets.size(); ++q) {
    g.psi[where[q]] = v.w[q].imag();
    g.phi[where[q]] = v.w[q].real();
    g.u[where[q]] = v.dw[q].real();
    g.v[where[q]] = -v.dw[q].imag();
  }
  return g;
}

}  // namespace stirflow
