#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stirflow/types.hpp"

namespace stirflow {

enum class CurveKind { circle, ellipse, polygon, sampled, mobius_ellipse };

// One boundary component. Ellipse axes a, b are FULL axis lengths, so the
// natural parametrization is center + 0.5 e^{i rot} (a cos t + i b sin t).
// mobius_ellipse is the image of such an ellipse (given in the upper
// half-plane) under the disk map xi -> i (xi - i) / (xi + i).
struct CurveSpec {
  CurveKind kind = CurveKind::circle;
  cplx center{};
  double a = 0.0;
  double b = 0.0;
  double rotation = 0.0;
  std::vector<cplx> vertices;
  std::vector<cplx> sample_points;
  std::vector<cplx> sample_derivs;

  static CurveSpec circle(cplx center, double radius);
  static CurveSpec ellipse(cplx center, double a, double b, double rotation);
  static CurveSpec polygon(std::vector<cplx> vertices);
  static CurveSpec sampled(std::vector<cplx> points, std::vector<cplx> derivs);
  static CurveSpec mobius_ellipse(cplx center, double a, double b, double rotation);
};

struct DomainSpec {
  bool bounded = false;
  std::vector<CurveSpec> curves;  // curve 0 is the vessel when bounded

  int m() const { return static_cast<int>(curves.size()) - 1; }
};

struct CurvePoint {
  cplx z;
  cplx dz;
  cplx d2z;
};

// Sampled boundary: n nodes per curve at t_i = 2 pi i / n, flattened curve by
// curve. Derivatives are with respect to the node parameter (any grading
// Jacobian is folded in). Immutable after construction.
class DiscretizedBoundary {
 public:
  int n() const { return n_; }
  int curve_count() const { return static_cast<int>(specs_.size()); }
  int m() const { return curve_count() - 1; }
  int size() const { return n_ * curve_count(); }
  bool bounded() const { return bounded_; }
  double dt() const { return kTwoPi / n_; }
  double grading_p() const { return grading_p_; }

  int curve_of(int node) const { return node / n_; }
  double t(int node) const { return (node % n_) * dt(); }

  const CplxVec& eta() const { return eta_; }
  const CplxVec& deta() const { return deta_; }
  const CplxVec& d2eta() const { return d2eta_; }

  std::span<const cplx> curve_eta(int j) const { return block(eta_, j); }
  std::span<const cplx> curve_deta(int j) const { return block(deta_, j); }

  // Oriented parametrization of curve j at an arbitrary parameter.
  CurvePoint eval(int j, double t) const;

  // Curve specs as supplied, and whether each was traversed in reverse.
  const CurveSpec& spec(int j) const { return specs_[static_cast<size_t>(j)]; }
  bool reversed(int j) const { return reversed_[static_cast<size_t>(j)]; }

  const std::vector<std::string>& warnings() const { return warnings_; }

  // Mean of the node points of curve j.
  cplx centroid(int j) const;

 private:
  friend DiscretizedBoundary discretize(const DomainSpec&, int, double);

  std::span<const cplx> block(const CplxVec& v, int j) const {
    return std::span<const cplx>(v).subspan(static_cast<size_t>(j) * n_, static_cast<size_t>(n_));
  }

  int n_ = 0;
  bool bounded_ = false;
  double grading_p_ = 3.0;
  std::vector<CurveSpec> specs_;
  std::vector<bool> reversed_;
  CplxVec eta_, deta_, d2eta_;
  std::vector<std::string> warnings_;
};

DiscretizedBoundary discretize(const DomainSpec& domain, int n, double grading_p = 3.0);

// Kress polynomial grading on [0, 2pi]: value, first and second derivative.
struct Grading {
  double w, dw, d2w;
};
Grading kress_grading(double s, double p);

enum class Location { fluid, inside_obstacle, outside_vessel, near_boundary };

struct PointClass {
  Location where = Location::fluid;
  int curve = -1;  // offending curve for inside_obstacle / near_boundary

  bool is_fluid() const { return where == Location::fluid; }
};

// Classifies points by discrete winding numbers of the sampled curves.
// near_boundary when closer to the node polyline than cutoff_factor times the
// length of the nearest polyline segment.
class PointLocator {
 public:
  explicit PointLocator(const DiscretizedBoundary& b, double cutoff_factor = 0.5);

  PointClass operator()(cplx z) const;
  // Winding number of curve j about z.
  int winding(int j, cplx z) const;
  // Smallest distance from z to the node polyline of curve j.
  double distance(int j, cplx z) const;

 private:
  const DiscretizedBoundary* b_;
  double cutoff_factor_;
  double max_seg_ = 0.0;
  std::vector<double> xmin_, xmax_, ymin_, ymax_;
};

PointClass point_location(const DiscretizedBoundary& b, cplx z, double cutoff_factor = 0.5);

// Moebius map of the unit disk onto the upper half-plane and its inverse.
cplx mobius(cplx z);
cplx mobius_inv(cplx xi);

}  // namespace stirflow
