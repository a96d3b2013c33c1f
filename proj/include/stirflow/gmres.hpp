#pragma once

#include <functional>
#include <span>

#include "stirflow/types.hpp"

namespace stirflow {

struct GmresResult {
  RealVec x;
  int iterations = 0;
  double residual = 0.0;  // relative, ||b - Ax|| / ||b||, from the Arnoldi recurrence
  bool converged = false;
  RealVec history;        // relative residual after each iteration
};

using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

// Restart-free GMRES with modified Gram-Schmidt and Givens rotations, x0 = 0.
GmresResult gmres(const LinearOperator& op, std::span<const double> b, double tol, int max_iterations);

}  // namespace stirflow
