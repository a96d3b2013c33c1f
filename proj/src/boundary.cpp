#include "stirflow/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stirflow/fft.hpp"

namespace stirflow {

CurveSpec CurveSpec::circle(cplx center, double radius) {
  CurveSpec c;
  c.kind = CurveKind::circle;
  c.center = center;
  c.a = c.b = 2.0 * radius;
  return c;
}

CurveSpec CurveSpec::ellipse(cplx center, double a, double b, double rotation) {
  CurveSpec c;
  c.kind = CurveKind::ellipse;
  c.center = center;
  c.a = a;
  c.b = b;
  c.rotation = rotation;
  return c;
}

CurveSpec CurveSpec::polygon(std::vector<cplx> vertices) {
  CurveSpec c;
  c.kind = CurveKind::polygon;
  c.vertices = std::move(vertices);
  return c;
}

CurveSpec CurveSpec::sampled(std::vector<cplx> points, std::vector<cplx> derivs) {
  CurveSpec c;
  c.kind = CurveKind::sampled;
  c.sample_points = std::move(points);
  c.sample_derivs = std::move(derivs);
  return c;
}

CurveSpec CurveSpec::mobius_ellipse(cplx center, double a, double b, double rotation) {
  CurveSpec c = ellipse(center, a, b, rotation);
  c.kind = CurveKind::mobius_ellipse;
  return c;
}

cplx mobius(cplx z) { return kI * (kI + z) / (kI - z); }
cplx mobius_inv(cplx xi) { return kI * (xi - kI) / (xi + kI); }

Grading kress_grading(double s, double p) {
  auto v = [p](double x) {
    const double u = (kPi - x) / kPi;
    return (1.0 / p - 0.5) * u * u * u + (1.0 / p) * (x - kPi) / kPi + 0.5;
  };
  auto dv = [p](double x) {
    const double u = (kPi - x) / kPi;
    return -(3.0 / kPi) * (1.0 / p - 0.5) * u * u + 1.0 / (p * kPi);
  };
  auto d2v = [p](double x) {
    const double u = (kPi - x) / kPi;
    return (6.0 / (kPi * kPi)) * (1.0 / p - 0.5) * u;
  };
  const double s2 = kTwoPi - s;
  const double v1 = v(s), v2 = v(s2);
  const double u1 = std::pow(v1, p), u2 = std::pow(v2, p);
  const double du1 = p * std::pow(v1, p - 1) * dv(s);
  const double du2 = -p * std::pow(v2, p - 1) * dv(s2);
  const double d2u1 = p * (p - 1) * std::pow(v1, p - 2) * dv(s) * dv(s) + p * std::pow(v1, p - 1) * d2v(s);
  const double d2u2 = p * (p - 1) * std::pow(v2, p - 2) * dv(s2) * dv(s2) + p * std::pow(v2, p - 1) * d2v(s2);
  const double D = u1 + u2, dD = du1 + du2, d2D = d2u1 + d2u2;
  const double num = du1 * D - u1 * dD;
  Grading g;
  g.w = kTwoPi * u1 / D;
  g.dw = kTwoPi * num / (D * D);
  g.d2w = kTwoPi * ((d2u1 * D - u1 * d2D) / (D * D) - 2.0 * dD * num / (D * D * D));
  return g;
}

namespace {

CurvePoint ellipse_point(const CurveSpec& c, double t) {
  const cplx e = std::polar(0.5, c.rotation);
  const double ct = std::cos(t), st = std::sin(t);
  return {c.center + e * cplx(c.a * ct, c.b * st), e * cplx(-c.a * st, c.b * ct),
          e * cplx(-c.a * ct, -c.b * st)};
}

CurvePoint mobius_ellipse_point(const CurveSpec& c, double t) {
  const CurvePoint e = ellipse_point(c, t);
  const cplx q = e.z + kI;
  return {mobius_inv(e.z), -2.0 / (q * q) * e.dz,
          4.0 / (q * q * q) * e.dz * e.dz - 2.0 / (q * q) * e.d2z};
}

// Corners sit half a node spacing past the edge start so no node lands on one.
CurvePoint polygon_point(const CurveSpec& c, double t, int n, double p) {
  const int edges = static_cast<int>(c.vertices.size());
  const double offset = kPi / n;
  double u = std::fmod(t - offset, kTwoPi);
  if (u < 0) u += kTwoPi;
  const double per = kTwoPi / edges;
  int k = std::min(static_cast<int>(u / per), edges - 1);
  const double s = (u - k * per) * edges;
  const cplx v0 = c.vertices[static_cast<size_t>(k)];
  const cplx d = c.vertices[static_cast<size_t>((k + 1) % edges)] - v0;
  const Grading g = kress_grading(s, p);
  const double E = edges;
  return {v0 + d * (g.w / kTwoPi), d * (g.dw * E / kTwoPi), d * (g.d2w * E * E / kTwoPi)};
}

double signed_area(const std::vector<cplx>& pts) {
  double area = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const cplx a = pts[i], b = pts[(i + 1) % pts.size()];
    area += a.real() * b.imag() - b.real() * a.imag();
  }
  return 0.5 * area;
}

bool segments_cross(cplx p1, cplx p2, cplx q1, cplx q2) {
  auto orient = [](cplx a, cplx b, cplx c) {
    const double v = (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

void validate_curve(const CurveSpec& c, int j, int n) {
  const std::string where = "curve " + std::to_string(j) + ": ";
  switch (c.kind) {
    case CurveKind::circle:
      if (!(c.a > 0)) throw GeometryError(where + "circle radius must be positive");
      if (c.a != c.b) throw GeometryError(where + "circle requires equal axes");
      break;
    case CurveKind::ellipse:
    case CurveKind::mobius_ellipse:
      if (!(c.a > 0) || !(c.b > 0)) throw GeometryError(where + "ellipse axes must be positive");
      break;
    case CurveKind::polygon: {
      const auto& v = c.vertices;
      if (v.size() < 3) throw GeometryError(where + "polygon needs at least 3 vertices");
      for (size_t i = 0; i < v.size(); ++i) {
        if (v[i] == v[(i + 1) % v.size()]) throw GeometryError(where + "repeated polygon vertex");
      }
      for (size_t i = 0; i < v.size(); ++i) {
        for (size_t k = i + 2; k < v.size(); ++k) {
          if (i == 0 && k == v.size() - 1) continue;
          if (segments_cross(v[i], v[i + 1], v[k], v[(k + 1) % v.size()]))
            throw GeometryError(where + "polygon is self-intersecting");
        }
      }
      break;
    }
    case CurveKind::sampled:
      if (static_cast<int>(c.sample_points.size()) != n || static_cast<int>(c.sample_derivs.size()) != n)
        throw GeometryError(where + "sampled curve must supply exactly n points and derivatives");
      break;
  }
}

}  // namespace

CurvePoint DiscretizedBoundary::eval(int j, double t) const {
  const CurveSpec& c = spec(j);
  const bool rev = reversed(j);
  const double tt = rev ? -t : t;
  CurvePoint p;
  switch (c.kind) {
    case CurveKind::circle:
    case CurveKind::ellipse:
      p = ellipse_point(c, tt);
      break;
    case CurveKind::mobius_ellipse:
      p = mobius_ellipse_point(c, tt);
      break;
    case CurveKind::polygon:
      p = polygon_point(c, tt, n_, grading_p_);
      break;
    case CurveKind::sampled: {
      // eta_ already holds the oriented samples
      fft::TrigInterpolant interp(curve_eta(j));
      interp.eval(t, p.z, p.dz, p.d2z);
      return p;
    }
  }
  if (rev) p.dz = -p.dz;
  return p;
}

cplx DiscretizedBoundary::centroid(int j) const {
  cplx s{};
  for (cplx z : curve_eta(j)) s += z;
  return s / static_cast<double>(n_);
}

DiscretizedBoundary discretize(const DomainSpec& domain, int n, double grading_p) {
  if (n < 8 || n % 2 != 0) throw GeometryError("n must be an even integer >= 8");
  if (domain.curves.empty()) throw GeometryError("domain has no curves");

  DiscretizedBoundary b;
  b.n_ = n;
  b.bounded_ = domain.bounded;
  b.grading_p_ = grading_p;
  b.specs_ = domain.curves;
  const int curves = static_cast<int>(domain.curves.size());
  b.reversed_.assign(static_cast<size_t>(curves), false);
  b.eta_.resize(static_cast<size_t>(curves) * n);
  b.deta_.resize(b.eta_.size());
  b.d2eta_.resize(b.eta_.size());

  for (int j = 0; j < curves; ++j) {
    CurveSpec& c = b.specs_[static_cast<size_t>(j)];
    validate_curve(c, j, n);
    const bool want_ccw = domain.bounded && j == 0;
    const std::string label = "curve " + std::to_string(j);

    switch (c.kind) {
      case CurveKind::circle:
      case CurveKind::ellipse:
      case CurveKind::mobius_ellipse:
        // natural parametrization is counterclockwise
        b.reversed_[static_cast<size_t>(j)] = !want_ccw;
        break;
      case CurveKind::polygon: {
        if (grading_p < 2.0) throw GeometryError("grading_p must be >= 2 for polygon curves");
        const double area = signed_area(c.vertices);
        if (area == 0.0) throw GeometryError(label + ": orientation cannot be established");
        if ((area > 0) != want_ccw) {
          std::reverse(c.vertices.begin(), c.vertices.end());
          b.warnings_.push_back(label + ": polygon vertices reversed to keep the fluid on the left");
        }
        break;
      }
      case CurveKind::sampled: {
        const double area = signed_area(c.sample_points);
        if (area == 0.0) throw GeometryError(label + ": orientation cannot be established");
        if ((area > 0) != want_ccw) {
          // eta(-t): index i -> (n - i) mod n, derivative negated
          std::vector<cplx> pts(static_cast<size_t>(n)), der(static_cast<size_t>(n));
          for (int i = 0; i < n; ++i) {
            const size_t src = static_cast<size_t>((n - i) % n);
            pts[static_cast<size_t>(i)] = c.sample_points[src];
            der[static_cast<size_t>(i)] = -c.sample_derivs[src];
          }
          c.sample_points = std::move(pts);
          c.sample_derivs = std::move(der);
          b.warnings_.push_back(label + ": sampled curve reversed to keep the fluid on the left");
        }
        break;
      }
    }

    const size_t base = static_cast<size_t>(j) * n;
    if (c.kind == CurveKind::sampled) {
      std::copy(c.sample_points.begin(), c.sample_points.end(), b.eta_.begin() + static_cast<long>(base));
      std::copy(c.sample_derivs.begin(), c.sample_derivs.end(), b.deta_.begin() + static_cast<long>(base));
      const CplxVec d2 = fft::derivative(c.sample_derivs);
      std::copy(d2.begin(), d2.end(), b.d2eta_.begin() + static_cast<long>(base));
    } else {
      for (int i = 0; i < n; ++i) {
        const CurvePoint p = b.eval(j, i * kTwoPi / n);
        b.eta_[base + static_cast<size_t>(i)] = p.z;
        b.deta_[base + static_cast<size_t>(i)] = p.dz;
        b.d2eta_[base + static_cast<size_t>(i)] = p.d2z;
      }
    }
    for (int i = 0; i < n; ++i) {
      const cplx d = b.deta_[base + static_cast<size_t>(i)];
      if (!(std::abs(d) > 0.0) || !std::isfinite(std::abs(d)))
        throw GeometryError(label + ": vanishing or invalid derivative at node " + std::to_string(i));
    }
  }

  // nesting and disjointness, checked on the node polylines
  PointLocator loc(b, 0.0);
  const int first_inner = domain.bounded ? 1 : 0;
  std::vector<double> xmin(static_cast<size_t>(curves)), xmax(xmin), ymin(xmin), ymax(xmin);
  for (int j = 0; j < curves; ++j) {
    auto pts = b.curve_eta(j);
    xmin[j] = ymin[j] = std::numeric_limits<double>::infinity();
    xmax[j] = ymax[j] = -std::numeric_limits<double>::infinity();
    for (cplx z : pts) {
      xmin[j] = std::min(xmin[j], z.real());
      xmax[j] = std::max(xmax[j], z.real());
      ymin[j] = std::min(ymin[j], z.imag());
      ymax[j] = std::max(ymax[j], z.imag());
    }
  }
  if (domain.bounded) {
    for (int j = 1; j < curves; ++j) {
      for (cplx z : b.curve_eta(j)) {
        if (loc.winding(0, z) != 1)
          throw GeometryError("curve " + std::to_string(j) + " is not enclosed by the vessel curve 0");
      }
    }
  }
  for (int i = first_inner; i < curves; ++i) {
    for (int j = i + 1; j < curves; ++j) {
      if (xmax[i] < xmin[j] || xmax[j] < xmin[i] || ymax[i] < ymin[j] || ymax[j] < ymin[i]) continue;
      auto overlap = [&](int p, int q) {
        for (cplx z : b.curve_eta(p))
          if (loc.winding(q, z) != 0) return true;
        return false;
      };
      if (overlap(i, j) || overlap(j, i))
        throw GeometryError("curves " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
    }
  }
  return b;
}

PointLocator::PointLocator(const DiscretizedBoundary& b, double cutoff_factor)
    : b_(&b), cutoff_factor_(cutoff_factor) {
  const int curves = b.curve_count();
  xmin_.resize(static_cast<size_t>(curves));
  xmax_.resize(xmin_.size());
  ymin_.resize(xmin_.size());
  ymax_.resize(xmin_.size());
  for (int j = 0; j < curves; ++j) {
    auto pts = b.curve_eta(j);
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (size_t i = 0; i < pts.size(); ++i) {
      x0 = std::min(x0, pts[i].real());
      x1 = std::max(x1, pts[i].real());
      y0 = std::min(y0, pts[i].imag());
      y1 = std::max(y1, pts[i].imag());
      max_seg_ = std::max(max_seg_, std::abs(pts[(i + 1) % pts.size()] - pts[i]));
    }
    xmin_[j] = x0;
    xmax_[j] = x1;
    ymin_[j] = y0;
    ymax_[j] = y1;
  }
}

int PointLocator::winding(int j, cplx z) const {
  if (z.real() < xmin_[j] || z.real() > xmax_[j] || z.imag() < ymin_[j] || z.imag() > ymax_[j]) return 0;
  auto pts = b_->curve_eta(j);
  const size_t n = pts.size();
  int wn = 0;
  const double x = z.real(), y = z.imag();
  for (size_t i = 0; i < n; ++i) {
    const cplx p = pts[i], q = pts[(i + 1) % n];
    const double left = (q.real() - p.real()) * (y - p.imag()) - (x - p.real()) * (q.imag() - p.imag());
    if (p.imag() <= y) {
      if (q.imag() > y && left > 0) ++wn;
    } else if (q.imag() <= y && left < 0) {
      --wn;
    }
  }
  return wn;
}

double PointLocator::distance(int j, cplx z) const {
  auto pts = b_->curve_eta(j);
  const size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const cplx p = pts[i], d = pts[(i + 1) % n] - p;
    const double len2 = std::norm(d);
    double s = len2 > 0 ? ((z - p) * std::conj(d)).real() / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, std::abs(z - p - s * d));
  }
  return best;
}

PointClass PointLocator::operator()(cplx z) const {
  const int curves = b_->curve_count();
  const double reach = cutoff_factor_ * max_seg_;
  if (cutoff_factor_ > 0) {
    for (int j = 0; j < curves; ++j) {
      if (z.real() < xmin_[j] - reach || z.real() > xmax_[j] + reach || z.imag() < ymin_[j] - reach ||
          z.imag() > ymax_[j] + reach)
        continue;
      auto pts = b_->curve_eta(j);
      const size_t n = pts.size();
      for (size_t i = 0; i < n; ++i) {
        const cplx p = pts[i], d = pts[(i + 1) % n] - p;
        const double len2 = std::norm(d);
        double s = len2 > 0 ? ((z - p) * std::conj(d)).real() / len2 : 0.0;
        s = std::clamp(s, 0.0, 1.0);
        if (std::abs(z - p - s * d) < cutoff_factor_ * std::sqrt(len2)) return {Location::near_boundary, j};
      }
    }
  }
  const int first_inner = b_->bounded() ? 1 : 0;
  if (b_->bounded() && winding(0, z) == 0) return {Location::outside_vessel, 0};
  for (int j = first_inner; j < curves; ++j) {
    if (winding(j, z) != 0) return {Location::inside_obstacle, j};
  }
  return {Location::fluid, -1};
}

PointClass point_location(const DiscretizedBoundary& b, cplx z, double cutoff_factor) {
  return PointLocator(b, cutoff_factor)(z);
}

}  // namespace stirflow
