#pragma once

#include <memory>
#include <span>

#include "stirflow/boundary.hpp"
#include "stirflow/treecode.hpp"
#include "stirflow/types.hpp"

namespace stirflow {

struct SolverOptions {
  double gmres_tol = 1e-14;
  int max_iterations = 100;
  MatvecBackend backend = MatvecBackend::dense;
  TreecodeOptions tree;
};

// GMRES did not reach the requested tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : Error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

// The function A(t) = exp(i (pi/2 - theta(t))) (eta(t) - alpha) (bounded) or
// exp(i (pi/2 - theta(t))) (unbounded), together with the discrete generalized
// Neumann kernel N and the companion kernel M built from it.
class KernelSystem {
 public:
  KernelSystem(DiscretizedBoundary boundary, PiecewiseConstantFn theta, cplx alpha = 0.0,
               MatvecBackend backend = MatvecBackend::dense, TreecodeOptions tree = {});

  const DiscretizedBoundary& boundary() const { return *boundary_; }
  const PiecewiseConstantFn& theta() const { return theta_; }
  cplx alpha() const { return alpha_; }
  MatvecBackend backend() const { return backend_; }
  const TreecodeOptions& tree_options() const { return tree_; }
  int size() const { return boundary_->size(); }

  const CplxVec& A() const { return A_; }
  const CplxVec& Aprime_over_A() const { return dA_over_A_; }
  // Curve j uses the singularity-subtracted quadrature (polygon curves).
  bool graded(int j) const { return graded_[static_cast<size_t>(j)]; }

  struct KernelValues {
    double N;
    double M1;  // M minus the same-curve cotangent part; equals M across curves
  };
  // Kernel values at node pair (s, t), analytic limits on the diagonal.
  // On graded curves the cotangent split is not used: M1 is M itself and the
  // diagonals are the singularity-subtracted coefficients divided by dt.
  KernelValues eval_kernels(int s, int t) const;

  // Nystrom trapezoidal discretizations, matrix-free.
  RealVec apply_N(std::span<const double> mu) const;
  RealVec apply_M(std::span<const double> gamma) const;

 private:
  // sum_{t != s} q_t / (eta_t - eta_s) for every node s.
  CplxVec node_cauchy_sum(std::span<const cplx> q) const;
  void check_length(size_t len) const;

  std::shared_ptr<const DiscretizedBoundary> boundary_;
  PiecewiseConstantFn theta_;
  cplx alpha_;
  MatvecBackend backend_;
  TreecodeOptions tree_;
  CplxVec A_, dA_over_A_;
  RealVec diag_N_, diag_M1_;
  std::vector<bool> graded_;
  CplxVec circulant_symbol_;  // same-curve conjugation plus cotangent correction
  std::shared_ptr<const CauchySum> summer_;
};

// Explicitly assembled Nystrom matrices (row-major, size^2), used as the
// reference for the matrix-free operators.
RealVec assemble_N(const KernelSystem& sys);
RealVec assemble_M(const KernelSystem& sys);

struct RHSolution {
  RealVec mu;
  PiecewiseConstantFn h;
  RealVec h_deviation;  // per curve: max |h_discrete(t) - h_j|
  CplxVec f_boundary;
  int gmres_iterations = 0;
  double residual = 0.0;       // GMRES relative residual
  double true_residual = 0.0;  // ||(I - N) mu + M gamma|| / ||M gamma||, recomputed
};

// Finds mu, h, f with A f = gamma + h + i mu and f analytic in G.
RHSolution solve_theorem1(const KernelSystem& sys, std::span<const double> gamma, const SolverOptions& opts = {});

struct CauchyValues {
  CplxVec f;
  CplxVec df;  // empty unless requested
};

// Cauchy integral on an arbitrary closed parametrized contour set: nodes,
// quadrature weights (dt * dzeta/dt) and values. interior_index is the exact
// value of (1/2 pi i) \oint dzeta / (zeta - z) for the targets (1 for bounded
// regions, 0 for exterior regions); the discrete version of that integral is
// used to cancel the leading quadrature error near the boundary.
CauchyValues cauchy_integral(std::span<const cplx> nodes, std::span<const cplx> weights,
                             std::span<const cplx> values, std::span<const cplx> targets, double interior_index,
                             bool with_derivative, MatvecBackend backend = MatvecBackend::dense,
                             const TreecodeOptions& tree = {});

// f(z) at fluid targets from boundary values of f. Throws GeometryError for
// targets that are not classified as fluid.
CplxVec cauchy_eval(const KernelSystem& sys, std::span<const cplx> f_boundary, std::span<const cplx> targets);
CauchyValues cauchy_eval_with_derivative(const KernelSystem& sys, std::span<const cplx> f_boundary,
                                         std::span<const cplx> targets, bool check_targets = true);

}  // namespace stirflow
