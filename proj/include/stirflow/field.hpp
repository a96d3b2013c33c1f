#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>

#include "stirflow/boundary.hpp"
#include "stirflow/gnk.hpp"

namespace stirflow {

// Rigid stirrers moving with constant complex velocities U_j and carrying
// circulations chi_j. Vectors are per curve; empty U / chi mean zero and empty
// anchors mean node centroids. Anchor 0 is unused in bounded domains.
struct StirrerProblem {
  DomainSpec domain;
  CplxVec U;
  RealVec chi;
  std::vector<cplx> anchors;
  cplx alpha = 0.0;
};

// Fills defaults, forces U_0 = chi_0 = 0 for bounded domains and checks that
// every anchor is strictly inside its curve.
StirrerProblem resolve_problem(const StirrerProblem& p, const DiscretizedBoundary& b);

// gamma(t) = Re[-i conj(U_j) X(t)] + sum_j chi_j / (2 pi) log|eta(t) - a_j|,
// with X = eta, or the supplied image points (slit flows, X = Phi(eta)).
RealVec build_rhs(const StirrerProblem& p, const DiscretizedBoundary& b, std::span<const cplx> image = {});

struct BCResidual {
  RealVec per_curve;    // max over midpoints of |Re[-i w] - Re[-i conj(U_j) X] - h_j|
  RealVec h_deviation;  // spread of the discrete h on each curve
  double max() const;
};

class FlowSolution {
 public:
  FlowSolution(StirrerProblem problem, std::shared_ptr<const KernelSystem> sys, RHSolution rh);

  const StirrerProblem& problem() const { return problem_; }
  const KernelSystem& system() const { return *sys_; }
  const DiscretizedBoundary& boundary() const { return sys_->boundary(); }
  const RHSolution& rh() const { return rh_; }

  struct Values {
    CplxVec w;
    CplxVec dw;
  };
  // w and w' at fluid targets. check = false skips the fluid test.
  Values evaluate(std::span<const cplx> targets, bool check = true) const;

  CplxVec potential_at(std::span<const cplx> targets) const;
  // u + i v = conj(w')
  CplxVec velocity_at(std::span<const cplx> targets) const;

  // Contour integral of w' dz counterclockwise around curve j on an offset
  // contour in the fluid: real part is the circulation, imaginary part the flux.
  cplx contour_integral(int j) const;
  double circulation_of(int j) const { return contour_integral(j).real(); }
  double flux_of(int j) const { return contour_integral(j).imag(); }

  // Boundary-condition residual at parameter midpoints of the exact curves,
  // f taken from the Cauchy integral of the node values. For slit flows pass
  // a function returning the image X(t) on curve j.
  BCResidual bc_residual() const;
  BCResidual bc_residual(const std::function<cplx(int, double)>& image) const;

  // Pi(z) = z - alpha (bounded) or 1 (unbounded).
  cplx Pi(cplx z) const { return boundary().bounded() ? z - problem_.alpha : cplx(1.0); }
  cplx dPi() const { return boundary().bounded() ? cplx(1.0) : cplx(0.0); }

 private:
  StirrerProblem problem_;
  std::shared_ptr<const KernelSystem> sys_;
  RHSolution rh_;
};

FlowSolution solve_flow(const StirrerProblem& p, const DiscretizedBoundary& b, const SolverOptions& opts = {});
// Same with prescribed image points X(eta) in the boundary condition.
FlowSolution solve_flow(const StirrerProblem& p, const DiscretizedBoundary& b, std::span<const cplx> image,
                        const SolverOptions& opts);

struct GridSpec {
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
  int nx = 101, ny = 101;

  double x(int i) const { return nx == 1 ? x_min : x_min + (x_max - x_min) * i / (nx - 1); }
  double y(int k) const { return ny == 1 ? y_min : y_min + (y_max - y_min) * k / (ny - 1); }
};

// Row-major (ny rows of nx values, row k at y(k)). Masked cells hold NaN.
// x / y are filled when the grid was evaluated in another plane and pushed
// forward (slit flows); otherwise they are empty.
struct FieldGrid {
  GridSpec spec;
  RealVec psi, phi, u, v;
  RealVec x, y;
  std::vector<Location> mask;

  size_t index(int i, int k) const { return static_cast<size_t>(k) * spec.nx + i; }
  size_t fluid_count() const;
};

FieldGrid streamfunction_grid(const FlowSolution& sol, const GridSpec& spec);

}  // namespace stirflow
