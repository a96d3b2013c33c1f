#pragma once

#include <memory>
#include <optional>
#include <span>

#include "stirflow/field.hpp"
#include "stirflow/gnk.hpp"

namespace stirflow {

namespace fft {
class TrigInterpolant;
}

enum class CanonicalType { plane_slits, halfplane_slits };

// A rectilinear slit of length `length` centered at `center` at angle `angle`,
// moving with complex velocity U and carrying circulation chi.
struct SlitSpec {
  cplx center{};
  double length = 1.0;
  double angle = 0.0;
  cplx U{};
  double chi = 0.0;
};

// Ellipse preimages (full axis lengths a, b = r a), one per slit. In the
// half-plane case the ellipses live in the upper half-plane and the preimage
// curves are their images under the inverse Moebius map.
struct PreimageState {
  std::vector<cplx> z;
  RealVec a, b;
  double r = 0.2;
  int k = 0;
};

struct SlitGeometry {
  double length = 0.0;
  cplx center{};
  double spread = 0.0;  // transverse extent in the slit frame
};

// Length, center and transverse spread of a closed image curve sampled at
// equispaced parameters, in the frame rotated by -theta. Extremes of the
// along-slit coordinate are refined on the trigonometric interpolant.
// Throws GeometryError if spread > spread_tol * length. The maps below record
// the achieved geometry without a straightness check.
SlitGeometry slit_geometry(std::span<const cplx> image, double theta, double spread_tol = 1e-6);

// d/dt of periodic samples, curve by curve (n samples per curve).
CplxVec trig_derivative(std::span<const cplx> samples, int n);

class SlitMapResult {
 public:
  CanonicalType canonical_type = CanonicalType::plane_slits;
  std::shared_ptr<const KernelSystem> system;
  RHSolution rh;
  double h0 = 0.0;              // half-plane normalization constant
  RealVec angles;               // per slit
  CplxVec Phi_boundary;         // Phi(eta(t)) at the nodes (inf at the pole eta = i)
  CplxVec Phi_prime_boundary;   // d Phi(eta(t)) / dt
  std::vector<SlitGeometry> achieved;
  int iterations = 0;
  double final_error = 0.0;
  RealVec error_history;
  std::vector<int> gmres_history;  // GMRES iterations per preimage iteration
  bool stalled = false;  // stopped on the roundoff plateau above eps
  PreimageState state;

  const DiscretizedBoundary& preimage() const { return system->boundary(); }
  // Index of the first preimage curve that is a slit preimage.
  int first_slit_curve() const { return canonical_type == CanonicalType::halfplane_slits ? 1 : 0; }

  // Phi and Phi' at points of the preimage domain (not checked).
  CplxVec map(std::span<const cplx> z) const;
  void map_with_derivative(std::span<const cplx> z, CplxVec& phi, CplxVec& dphi) const;
  // Phi(eta_j(t)) at an arbitrary parameter of preimage curve j.
  cplx boundary_image(int j, double t) const;

  // per curve interpolants of the solved boundary values of f
  std::vector<std::shared_ptr<const fft::TrigInterpolant>> f_interp;
};

// Map of an unbounded preimage onto the plane minus slits at the
// given angles (one per curve); Phi(z) = z + f(z).
SlitMapResult rect_slit_map(const DiscretizedBoundary& b, std::span<const double> angles,
                            const SolverOptions& opts = {});

// Map of a bounded preimage (unit circle outside, holes inside)
// onto the upper half-plane minus slits at the given angles (one per hole).
SlitMapResult halfplane_slit_map(const DiscretizedBoundary& b, std::span<const double> angles,
                                 const SolverOptions& opts = {});

struct PreimageOptions {
  double r = 0.2;
  double eps = 1e-14;
  int max_iter = 100;
  int n = 256;
  double spread_tol = 1e-6;
  // Accept a stalled iteration once the error sits below stall_level (relative
  // to the slit scale) and has not improved for stall_window iterations.
  int stall_window = 5;
  double stall_level = 1e-11;
};

double default_ratio(CanonicalType t);

class PreimageError : public Error {
 public:
  enum class Reason { too_many_iterations, degenerate, intersecting, crosses_axis, diverging };
  PreimageError(const std::string& what, Reason reason, RealVec history, PreimageState last)
      : Error(what), reason(reason), history(std::move(history)), last(std::move(last)) {}
  Reason reason;
  RealVec history;
  PreimageState last;
};

// Preimage domain whose map sends each ellipse (quasi-ellipse) onto the
// prescribed slit. The returned map belongs to the final preimage state.
SlitMapResult find_preimage(std::span<const SlitSpec> slits, CanonicalType type, const PreimageOptions& popts,
                            const SolverOptions& sopts = {}, const std::optional<PreimageState>& initial = {});

// Throws GeometryError unless the slits are non-degenerate and pairwise
// disjoint (and clear of the real axis and of i in the half-plane case).
void validate_slits(std::span<const SlitSpec> slits, CanonicalType type);

// Preimage domain for a given state.
DomainSpec preimage_domain(const PreimageState& s, std::span<const SlitSpec> slits, CanonicalType type);

// Inverse map at points of the slit domain (off the slits; upper half-plane
// in the half-plane case).
CplxVec inverse_map(const SlitMapResult& m, std::span<const cplx> w);

struct SlitFlow {
  SlitMapResult map;
  std::optional<FlowSolution> flow;

  // Complex velocity in the slit plane at preimage points.
  CplxVec velocity_at_preimage(std::span<const cplx> z) const;
  // Residual of the transplanted boundary condition.
  BCResidual bc_residual() const;
};

// Stirrer problem transplanted to the preimage of a slit domain.
SlitFlow solve_slit_flow(std::span<const SlitSpec> slits, CanonicalType type, const PreimageOptions& popts,
                         const SolverOptions& sopts = {});

// Field on a grid of preimage points pushed forward through Phi. The grid spec
// is in the preimage plane (plane case) or in the plane of Psi(z) (half-plane
// case); x / y of the result hold the slit-plane positions.
FieldGrid slit_flow_grid(const SlitFlow& sf, const GridSpec& spec);

inline FieldGrid slit_flow(std::span<const SlitSpec> slits, CanonicalType type, const PreimageOptions& popts,
                           const SolverOptions& sopts, const GridSpec& spec) {
  return slit_flow_grid(solve_slit_flow(slits, type, popts, sopts), spec);
}

}  // namespace stirflow
