#include "stirflow/gnk.hpp"

#include <cmath>

#include "stirflow/fft.hpp"
#include "stirflow/gmres.hpp"

namespace stirflow {

KernelSystem::KernelSystem(DiscretizedBoundary boundary, PiecewiseConstantFn theta, cplx alpha,
                           MatvecBackend backend, TreecodeOptions tree)
    : boundary_(std::make_shared<const DiscretizedBoundary>(std::move(boundary))),
      theta_(std::move(theta)),
      alpha_(alpha),
      backend_(backend),
      tree_(tree) {
  const DiscretizedBoundary& b = *boundary_;
  if (theta_.size() != b.curve_count()) throw Error("theta must have one value per curve");
  if (b.bounded()) {
    const PointClass pc = point_location(b, alpha_, 0.0);
    if (!pc.is_fluid()) throw GeometryError("alpha must lie in the fluid domain");
  }
  const int N = b.size(), n = b.n();
  A_.resize(static_cast<size_t>(N));
  dA_over_A_.resize(static_cast<size_t>(N));
  diag_N_.resize(static_cast<size_t>(N));
  diag_M1_.resize(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const size_t ii = static_cast<size_t>(i);
    const cplx phase = std::polar(1.0, kPi / 2 - theta_[b.curve_of(i)]);
    const cplx z = b.eta()[ii], dz = b.deta()[ii], d2z = b.d2eta()[ii];
    if (b.bounded()) {
      A_[ii] = phase * (z - alpha_);
      dA_over_A_[ii] = dz / (z - alpha_);
    } else {
      A_[ii] = phase;
      dA_over_A_[ii] = 0.0;
    }
    if (!(std::abs(A_[ii]) > 0) || !std::isfinite(std::abs(A_[ii]))) throw GeometryError("A vanishes at a node");
    const cplx lim = 0.5 * d2z / dz - dA_over_A_[ii];
    diag_N_[ii] = lim.imag() / kPi;
    diag_M1_[ii] = lim.real() / kPi;
  }

  // Graded curves: subtract mu(s) (resp. gamma(s)) from the density so the
  // trapezoidal rule only sees a bounded integrand near the corners. What is
  // left is a modified diagonal; the principal value of the Cauchy integral
  // of 1 over the own curve is +-i pi.
  graded_.assign(static_cast<size_t>(b.curve_count()), false);
  for (int j = 0; j < b.curve_count(); ++j) {
    if (b.spec(j).kind != CurveKind::polygon) continue;
    graded_[static_cast<size_t>(j)] = true;
    const auto eta = b.curve_eta(j), deta = b.curve_deta(j);
    CplxVec q(static_cast<size_t>(n)), phi(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) q[static_cast<size_t>(i)] = b.dt() * deta[static_cast<size_t>(i)];
    DirectCauchySum(eta, std::nullopt).apply(q, phi);
    const double sigma = (b.bounded() && j == 0) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      const size_t ii = static_cast<size_t>(j) * n + i;
      const cplx S = -phi[static_cast<size_t>(i)];  // sum_{t != s} h eta'(t) / (eta(t) - eta(s))
      const double h = b.dt();
      diag_N_[ii] = (sigma - S.imag() / kPi - h * dA_over_A_[ii].imag() / kPi) / h;
      diag_M1_[ii] = (-S.real() / kPi - h * dA_over_A_[ii].real() / kPi) / h;
    }
  }

  // Conjugation multiplier -i sgn(k) (zero and Nyquist modes annihilated),
  // negated, plus the DFT of the trapezoidal cotangent kernel that the
  // off-diagonal M1 sum leaves over.
  CplxVec cot_kernel(static_cast<size_t>(n), 0.0);
  for (int m = 1; m < n; ++m) cot_kernel[static_cast<size_t>(m)] = 1.0 / (n * std::tan(kPi * m / n));
  circulant_symbol_.resize(static_cast<size_t>(n));
  fft::forward(cot_kernel, circulant_symbol_);
  for (int k = 0; k < n; ++k) {
    const int w = fft::wavenumber(k, n);
    const double sgn = (w == 0 || 2 * w == n) ? 0.0 : (w > 0 ? 1.0 : -1.0);
    circulant_symbol_[static_cast<size_t>(k)] += kI * sgn;
  }

  summer_ = make_cauchy_sum(backend_, b.eta(), std::nullopt, tree_);
}

KernelSystem::KernelValues KernelSystem::eval_kernels(int s, int t) const {
  const DiscretizedBoundary& b = *boundary_;
  if (s < 0 || t < 0 || s >= b.size() || t >= b.size()) throw Error("eval_kernels: node index out of range");
  const size_t ss = static_cast<size_t>(s), tt = static_cast<size_t>(t);
  if (s == t) return {diag_N_[ss], diag_M1_[ss]};
  const cplx diff = b.eta()[tt] - b.eta()[ss];
  if (diff == cplx{}) throw GeometryError("coincident boundary points at distinct nodes");
  const cplx g = (A_[ss] / A_[tt]) * b.deta()[tt] / diff;
  double M1 = g.real() / kPi;
  if (b.curve_of(s) == b.curve_of(t) && !graded_[static_cast<size_t>(b.curve_of(s))]) {
    const int di = (s % b.n()) - (t % b.n());
    M1 += 1.0 / (kTwoPi * std::tan(kPi * di / b.n()));
  }
  return {g.imag() / kPi, M1};
}

void KernelSystem::check_length(size_t len) const {
  if (len != static_cast<size_t>(size())) throw Error("operator input length must equal (m+1) n");
}

CplxVec KernelSystem::node_cauchy_sum(std::span<const cplx> q) const {
  CplxVec phi(q.size());
  summer_->apply(q, phi);
  for (auto& v : phi) v = -v;
  return phi;
}

RealVec KernelSystem::apply_N(std::span<const double> mu) const {
  check_length(mu.size());
  const DiscretizedBoundary& b = *boundary_;
  const size_t N = mu.size();
  const double h = b.dt();
  CplxVec q(N);
  for (size_t t = 0; t < N; ++t) q[t] = h * mu[t] * b.deta()[t] / A_[t];
  const CplxVec S = node_cauchy_sum(q);
  RealVec out(N);
  for (size_t s = 0; s < N; ++s) out[s] = (A_[s] * S[s]).imag() / kPi + h * diag_N_[s] * mu[s];
  return out;
}

RealVec KernelSystem::apply_M(std::span<const double> gamma) const {
  check_length(gamma.size());
  const DiscretizedBoundary& b = *boundary_;
  const size_t N = gamma.size();
  const int n = b.n();
  const double h = b.dt();
  CplxVec q(N);
  for (size_t t = 0; t < N; ++t) q[t] = h * gamma[t] * b.deta()[t] / A_[t];
  const CplxVec S = node_cauchy_sum(q);
  RealVec out(N);
  for (size_t s = 0; s < N; ++s) out[s] = (A_[s] * S[s]).real() / kPi + h * diag_M1_[s] * gamma[s];

  CplxVec block(static_cast<size_t>(n)), res(static_cast<size_t>(n));
  for (int j = 0; j < b.curve_count(); ++j) {
    const size_t base = static_cast<size_t>(j) * n;
    for (int i = 0; i < n; ++i) block[static_cast<size_t>(i)] = gamma[base + static_cast<size_t>(i)];
    if (graded_[static_cast<size_t>(j)]) {
      // diagonal limit of the subtracted integrand carries (h / pi) gamma'(s)
      res = fft::derivative(block);
      for (int i = 0; i < n; ++i) out[base + static_cast<size_t>(i)] += h / kPi * res[static_cast<size_t>(i)].real();
    } else {
      fft::apply_symbol(block, circulant_symbol_, res);
      for (int i = 0; i < n; ++i) out[base + static_cast<size_t>(i)] += res[static_cast<size_t>(i)].real();
    }
  }
  return out;
}

RealVec assemble_N(const KernelSystem& sys) {
  const int N = sys.size();
  const double h = sys.boundary().dt();
  RealVec mat(static_cast<size_t>(N) * N);
  for (int s = 0; s < N; ++s)
    for (int t = 0; t < N; ++t) mat[static_cast<size_t>(s) * N + t] = h * sys.eval_kernels(s, t).N;
  return mat;
}

RealVec assemble_M(const KernelSystem& sys) {
  const DiscretizedBoundary& b = sys.boundary();
  const int N = sys.size(), n = b.n();
  const double h = b.dt();
  RealVec mat(static_cast<size_t>(N) * N);
  for (int s = 0; s < N; ++s) {
    for (int t = 0; t < N; ++t) {
      double v = h * sys.eval_kernels(s, t).M1;
      if (b.curve_of(s) == b.curve_of(t) && sys.graded(b.curve_of(s))) {
        // spectral differentiation matrix, scaled by h / pi
        const int m = ((s % n) - (t % n) + n) % n;
        if (m != 0) v += h / kPi * 0.5 * (m % 2 ? -1.0 : 1.0) / std::tan(kPi * m / n);
      } else if (b.curve_of(s) == b.curve_of(t)) {
        // discrete conjugation: (2/n) cot(pi m / n) on odd offsets m, zero on even
        const int m = ((s % n) - (t % n) + n) % n;
        if (m % 2 == 1) v -= 2.0 / (n * std::tan(kPi * m / n));
      }
      mat[static_cast<size_t>(s) * N + t] = v;
    }
  }
  return mat;
}

RHSolution solve_theorem1(const KernelSystem& sys, std::span<const double> gamma, const SolverOptions& opts) {
  const DiscretizedBoundary& b = sys.boundary();
  const size_t N = static_cast<size_t>(sys.size());
  if (gamma.size() != N) throw Error("gamma length must equal (m+1) n");
  for (double g : gamma)
    if (!std::isfinite(g)) throw Error("non-finite right-hand side");

  RealVec Mg = sys.apply_M(gamma);
  RealVec rhs(N);
  for (size_t i = 0; i < N; ++i) rhs[i] = -Mg[i];

  LinearOperator op = [&sys](std::span<const double> x, std::span<double> y) {
    const RealVec Nx = sys.apply_N(x);
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] - Nx[i];
  };
  GmresResult gm = gmres(op, rhs, opts.gmres_tol, opts.max_iterations);
  if (!gm.converged) {
    throw SolverError("GMRES did not reach tolerance: residual " + std::to_string(gm.residual) + " after " +
                          std::to_string(gm.iterations) + " iterations",
                      gm.iterations, gm.residual);
  }

  RHSolution sol;
  sol.mu = std::move(gm.x);
  sol.gmres_iterations = gm.iterations;
  sol.residual = gm.residual;

  const RealVec Nmu = sys.apply_N(sol.mu);
  double rnorm = 0.0, bnorm = 0.0;
  for (size_t i = 0; i < N; ++i) {
    const double r = sol.mu[i] - Nmu[i] + Mg[i];
    rnorm += r * r;
    bnorm += Mg[i] * Mg[i];
  }
  sol.true_residual = bnorm > 0 ? std::sqrt(rnorm / bnorm) : std::sqrt(rnorm);

  // h = [M mu - (I - N) gamma] / 2, constant per curve up to discretization error
  const RealVec Mmu = sys.apply_M(sol.mu);
  const RealVec Ng = sys.apply_N(gamma);
  const int curves = b.curve_count(), n = b.n();
  RealVec hraw(N);
  for (size_t i = 0; i < N; ++i) hraw[i] = 0.5 * (Mmu[i] - (gamma[i] - Ng[i]));
  sol.h.values.assign(static_cast<size_t>(curves), 0.0);
  sol.h_deviation.assign(static_cast<size_t>(curves), 0.0);
  for (int j = 0; j < curves; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += hraw[static_cast<size_t>(j) * n + i];
    mean /= n;
    double dev = 0.0;
    for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(hraw[static_cast<size_t>(j) * n + i] - mean));
    sol.h[j] = mean;
    sol.h_deviation[static_cast<size_t>(j)] = dev;
  }

  sol.f_boundary.resize(N);
  for (size_t i = 0; i < N; ++i)
    sol.f_boundary[i] = cplx(gamma[i] + sol.h[b.curve_of(static_cast<int>(i))], sol.mu[i]) / sys.A()[i];
  return sol;
}

CauchyValues cauchy_integral(std::span<const cplx> nodes, std::span<const cplx> weights,
                             std::span<const cplx> values, std::span<const cplx> targets, double interior_index,
                             bool with_derivative, MatvecBackend backend, const TreecodeOptions& tree) {
  if (nodes.size() != weights.size() || nodes.size() != values.size()) throw Error("cauchy: length mismatch");
  const size_t nt = targets.size();
  CauchyValues out;
  out.f.resize(nt);
  if (nt == 0) return out;
  auto summer = make_cauchy_sum(backend, nodes, targets, tree);

  CplxVec wf(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j) wf[j] = weights[j] * values[j];
  CplxVec s0(nt), s1(nt), t2, s2;
  // phi = sum q / (z - s), so sum q / (s - z) = -phi and sum q / (s - z)^2 = -phi'
  if (with_derivative) {
    t2.resize(nt);
    s2.resize(nt);
    summer->apply(weights, s0, t2);
    summer->apply(wf, s1, s2);
  } else {
    summer->apply(weights, s0);
    summer->apply(wf, s1);
  }
  const cplx inv2pii = 1.0 / (kTwoPi * kI);
  if (with_derivative) out.df.resize(nt);
  for (size_t i = 0; i < nt; ++i) {
    // exact hits on a node return the node value
    bool hit = false;
    for (size_t j = 0; j < nodes.size() && !std::isfinite(std::abs(s0[i])); ++j) {
      if (nodes[j] == targets[i]) {
        out.f[i] = values[j];
        hit = true;
        break;
      }
    }
    if (hit) {
      if (with_derivative) out.df[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const cplx S0 = -s0[i] * inv2pii, S1 = -s1[i] * inv2pii;
    const cplx f = S1 / (1.0 + S0 - interior_index);
    out.f[i] = f;
    if (with_derivative) out.df[i] = (-s2[i] + f * t2[i]) * inv2pii / (1.0 + S0 - interior_index);
  }
  return out;
}

namespace {

void check_fluid(const KernelSystem& sys, std::span<const cplx> targets) {
  PointLocator loc(sys.boundary());
  for (size_t i = 0; i < targets.size(); ++i) {
    const PointClass pc = loc(targets[i]);
    if (!pc.is_fluid())
      throw GeometryError("cauchy_eval: target " + std::to_string(i) + " is not in the fluid region");
  }
}

}  // namespace

CauchyValues cauchy_eval_with_derivative(const KernelSystem& sys, std::span<const cplx> f_boundary,
                                         std::span<const cplx> targets, bool check_targets) {
  const DiscretizedBoundary& b = sys.boundary();
  if (f_boundary.size() != static_cast<size_t>(b.size())) throw Error("cauchy_eval: boundary data length");
  if (check_targets) check_fluid(sys, targets);
  CplxVec w(b.deta().size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = b.dt() * b.deta()[i];
  return cauchy_integral(b.eta(), w, f_boundary, targets, b.bounded() ? 1.0 : 0.0, true, sys.backend(),
                         sys.tree_options());
}

CplxVec cauchy_eval(const KernelSystem& sys, std::span<const cplx> f_boundary, std::span<const cplx> targets) {
  const DiscretizedBoundary& b = sys.boundary();
  if (f_boundary.size() != static_cast<size_t>(b.size())) throw Error("cauchy_eval: boundary data length");
  check_fluid(sys, targets);
  CplxVec w(b.deta().size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = b.dt() * b.deta()[i];
  return cauchy_integral(b.eta(), w, f_boundary, targets, b.bounded() ? 1.0 : 0.0, false, sys.backend(),
                         sys.tree_options())
      .f;
}

}  // namespace stirflow
