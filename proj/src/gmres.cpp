#include "stirflow/gmres.hpp"

#include <cmath>

namespace stirflow {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

GmresResult gmres(const LinearOperator& op, std::span<const double> b, double tol, int max_iterations) {
  const size_t N = b.size();
  GmresResult res;
  res.x.assign(N, 0.0);
  const double beta = std::sqrt(dot(b, b));
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }

  const int kmax = std::max(max_iterations, 0);
  std::vector<RealVec> V;
  V.reserve(static_cast<size_t>(kmax) + 1);
  V.emplace_back(b.begin(), b.end());
  for (double& v : V[0]) v /= beta;

  // H stored column by column, already rotated
  std::vector<RealVec> H;
  RealVec cs, sn, g{beta};
  int k = 0;
  double rel = 1.0;
  while (k < kmax && rel > tol) {
    RealVec w(N);
    op(V[static_cast<size_t>(k)], w);
    RealVec h(static_cast<size_t>(k) + 2, 0.0);
    for (int i = 0; i <= k; ++i) {
      h[i] = dot(w, V[static_cast<size_t>(i)]);
      const auto& vi = V[static_cast<size_t>(i)];
      for (size_t q = 0; q < N; ++q) w[q] -= h[i] * vi[q];
    }
    h[k + 1] = std::sqrt(dot(w, w));
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double r = std::hypot(h[k], h[k + 1]);
    const double c = r == 0.0 ? 1.0 : h[k] / r;
    const double s = r == 0.0 ? 0.0 : h[k + 1] / r;
    const double hk1 = h[k + 1];
    cs.push_back(c);
    sn.push_back(s);
    h[k] = r;
    h[k + 1] = 0.0;
    g.push_back(-s * g[k]);
    g[k] = c * g[k];
    H.push_back(std::move(h));
    ++k;
    rel = std::abs(g[k]) / beta;
    res.history.push_back(rel);
    if (hk1 == 0.0) break;  // lucky breakdown: exact solution in the subspace
    for (double& v : w) v /= hk1;
    V.push_back(std::move(w));
  }

  RealVec y(static_cast<size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    double s = g[i];
    for (int j = i + 1; j < k; ++j) s -= H[j][i] * y[j];
    y[i] = s / H[i][i];
  }
  for (int i = 0; i < k; ++i) {
    const auto& vi = V[static_cast<size_t>(i)];
    for (size_t q = 0; q < N; ++q) res.x[q] += y[i] * vi[q];
  }
  res.iterations = k;
  res.residual = rel;
  res.converged = rel <= tol;
  return res;
}

}  // namespace stirflow
