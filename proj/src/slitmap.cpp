#include "stirflow/slitmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stirflow/fft.hpp"

namespace stirflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

cplx psi(cplx z) { return mobius(z); }
cplx dpsi(cplx z) { return -2.0 / ((kI - z) * (kI - z)); }

CplxVec block_of(std::span<const cplx> v, int j, int n) {
  return CplxVec(v.begin() + static_cast<std::ptrdiff_t>(j) * n, v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
}

void build_interpolants(SlitMapResult& r) {
  const DiscretizedBoundary& b = r.preimage();
  r.f_interp.clear();
  for (int j = 0; j < b.curve_count(); ++j)
    r.f_interp.push_back(
        std::make_shared<const fft::TrigInterpolant>(block_of(r.rh.f_boundary, j, b.n())));
}

// Along-slit extreme of the interpolant x(t), refined from node i0 by Newton.
double refine_extreme(const fft::TrigInterpolant& x, double t0, double h, double fallback) {
  double t = t0;
  for (int it = 0; it < 30; ++it) {
    cplx v, d1, d2;
    x.eval(t, v, d1, d2);
    if (d2.real() == 0.0) break;
    const double step = d1.real() / d2.real();
    t -= step;
    if (std::abs(t - t0) > h) return fallback;
    if (std::abs(step) < 1e-15) break;
  }
  const double v = x(t).real();
  return v;
}

struct EllipseShape {
  cplx c;
  double a, b, rot;
  bool contains(cplx p) const {
    const cplx q = std::polar(1.0, -rot) * (p - c);
    const double u = 2 * q.real() / a, v = 2 * q.imag() / b;
    return u * u + v * v <= 1.0;
  }
  cplx point(double t) const { return c + 0.5 * std::polar(1.0, rot) * cplx(a * std::cos(t), b * std::sin(t)); }
};

bool ellipses_intersect(const EllipseShape& e1, const EllipseShape& e2) {
  if (std::abs(e1.c - e2.c) > 0.5 * (e1.a + e2.a)) return false;
  for (int k = 0; k < 256; ++k) {
    const double t = kTwoPi * k / 256;
    if (e2.contains(e1.point(t)) || e1.contains(e2.point(t))) return true;
  }
  return false;
}

bool segments_intersect(cplx p1, cplx p2, cplx q1, cplx q2) {
  const auto cross = [](cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); };
  const double d1 = cross(q2 - q1, p1 - q1), d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1), d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  const auto on = [&](cplx a, cplx b, cplx p) {
    return std::abs(cross(b - a, p - a)) <= 1e-14 * std::abs(b - a) * (1 + std::abs(p - a)) &&
           std::min(a.real(), b.real()) - 1e-14 <= p.real() && p.real() <= std::max(a.real(), b.real()) + 1e-14 &&
           std::min(a.imag(), b.imag()) - 1e-14 <= p.imag() && p.imag() <= std::max(a.imag(), b.imag()) + 1e-14;
  };
  return on(q1, q2, p1) || on(q1, q2, p2) || on(p1, p2, q1) || on(p1, p2, q2);
}

double distance_to_segment(cplx p, cplx a, cplx b) {
  const cplx d = b - a;
  const double t = std::clamp(((p - a) * std::conj(d)).real() / std::norm(d), 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

}  // namespace

void validate_slits(std::span<const SlitSpec> slits, CanonicalType type) {
  if (slits.empty()) throw Error("slits: at least one slit is required");
  for (size_t j = 0; j < slits.size(); ++j) {
    const SlitSpec& s = slits[j];
    if (!(s.length > 0) || !std::isfinite(s.length)) throw Error("slits: length must be positive");
    if (!std::isfinite(std::abs(s.center)) || !std::isfinite(s.angle)) throw Error("slits: non-finite geometry");
    if (type == CanonicalType::halfplane_slits) {
      const double ext = 0.5 * s.length * std::abs(std::sin(s.angle));
      if (s.center.imag() - ext <= 0) throw GeometryError("slits: half-plane slits must lie in Im > 0");
      // i is the image of the normalization point 0
      const cplx d = 0.5 * s.length * std::polar(1.0, s.angle);
      if (distance_to_segment(kI, s.center - d, s.center + d) <= 1e-3 * s.length)
        throw GeometryError("slits: half-plane slits must keep clear of the point i");
    }
  }
  for (size_t j = 0; j < slits.size(); ++j) {
    for (size_t k = j + 1; k < slits.size(); ++k) {
      const cplx dj = 0.5 * slits[j].length * std::polar(1.0, slits[j].angle);
      const cplx dk = 0.5 * slits[k].length * std::polar(1.0, slits[k].angle);
      if (segments_intersect(slits[j].center - dj, slits[j].center + dj, slits[k].center - dk,
                             slits[k].center + dk))
        throw GeometryError("slits: slits " + std::to_string(j) + " and " + std::to_string(k) + " intersect");
    }
  }
}

namespace {

// Divergence checks on a candidate state, before it is discretized.
void check_state(const PreimageState& st, std::span<const SlitSpec> slits, CanonicalType type,
                 const RealVec& history) {
  const size_t m = slits.size();
  for (size_t j = 0; j < m; ++j) {
    if (!(st.a[j] > 0.0) || !(st.b[j] > 0.0))
      throw PreimageError("find_preimage: ellipse " + std::to_string(j) + " degenerated",
                          PreimageError::Reason::degenerate, history, st);
  }
  std::vector<EllipseShape> shapes;
  for (size_t j = 0; j < m; ++j) shapes.push_back({st.z[j], st.a[j], st.b[j], slits[j].angle});
  for (size_t j = 0; j < m; ++j) {
    if (type == CanonicalType::halfplane_slits) {
      const double ext = 0.5 * std::hypot(st.a[j] * std::sin(slits[j].angle), st.b[j] * std::cos(slits[j].angle));
      if (st.z[j].imag() - ext <= 0)
        throw PreimageError("find_preimage: ellipse " + std::to_string(j) + " crosses the real axis",
                            PreimageError::Reason::crosses_axis, history, st);
      if (shapes[j].contains(kI))
        throw PreimageError("find_preimage: ellipse " + std::to_string(j) + " covers the point i",
                            PreimageError::Reason::degenerate, history, st);
    }
    for (size_t l = j + 1; l < m; ++l) {
      if (ellipses_intersect(shapes[j], shapes[l]))
        throw PreimageError("find_preimage: ellipses " + std::to_string(j) + " and " + std::to_string(l) +
                                " intersect",
                            PreimageError::Reason::intersecting, history, st);
    }
  }
}

DomainSpec domain_from(const DiscretizedBoundary& b) {
  DomainSpec d{b.bounded(), {}};
  for (int j = 0; j < b.curve_count(); ++j) d.curves.push_back(b.spec(j));
  return d;
}

}  // namespace

SlitGeometry slit_geometry(std::span<const cplx> image, double theta, double spread_tol) {
  const size_t n = image.size();
  if (n < 4) throw Error("slit_geometry: too few samples");
  const cplx rot = std::polar(1.0, -theta);
  CplxVec x(n);
  double ymin = kInf, ymax = -kInf, ysum = 0.0;
  size_t imax = 0, imin = 0;
  for (size_t i = 0; i < n; ++i) {
    const cplx w = rot * image[i];
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw GeometryError("slit_geometry: non-finite image");
    x[i] = w.real();
    ymin = std::min(ymin, w.imag());
    ymax = std::max(ymax, w.imag());
    ysum += w.imag();
    if (w.real() > x[imax].real()) imax = i;
    if (w.real() < x[imin].real()) imin = i;
  }
  fft::TrigInterpolant interp(x);
  const double h = kTwoPi / static_cast<double>(n);
  const double xmax = std::max(x[imax].real(), refine_extreme(interp, h * imax, h, x[imax].real()));
  const double xmin = std::min(x[imin].real(), refine_extreme(interp, h * imin, h, x[imin].real()));
  SlitGeometry g;
  g.length = xmax - xmin;
  g.spread = ymax - ymin;
  g.center = std::polar(1.0, theta) * cplx(0.5 * (xmax + xmin), ysum / static_cast<double>(n));
  if (g.spread > spread_tol * g.length)
    throw GeometryError("slit_geometry: image is not a straight slit (spread " + std::to_string(g.spread) +
                        ", length " + std::to_string(g.length) + ")");
  return g;
}

CplxVec trig_derivative(std::span<const cplx> samples, int n) {
  if (n <= 0 || n % 2 != 0 || samples.size() % static_cast<size_t>(n) != 0)
    throw Error("trig_derivative: samples must be whole curves of even length n");
  CplxVec out(samples.size());
  for (size_t base = 0; base < samples.size(); base += static_cast<size_t>(n)) {
    const CplxVec d = fft::derivative(samples.subspan(base, static_cast<size_t>(n)));
    std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(base));
  }
  return out;
}

void SlitMapResult::map_with_derivative(std::span<const cplx> z, CplxVec& phi, CplxVec& dphi) const {
  const CauchyValues cv = cauchy_eval_with_derivative(*system, rh.f_boundary, z, false);
  phi.resize(z.size());
  dphi.resize(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    if (canonical_type == CanonicalType::plane_slits) {
      phi[i] = z[i] + cv.f[i];
      dphi[i] = 1.0 + cv.df[i];
    } else {
      phi[i] = (psi(z[i]) + z[i] * cv.f[i] + kI * h0) / (1.0 + h0);
      dphi[i] = (dpsi(z[i]) + cv.f[i] + z[i] * cv.df[i]) / (1.0 + h0);
    }
  }
}

CplxVec SlitMapResult::map(std::span<const cplx> z) const {
  CplxVec phi, dphi;
  map_with_derivative(z, phi, dphi);
  return phi;
}

cplx SlitMapResult::boundary_image(int j, double t) const {
  const cplx eta = preimage().eval(j, t).z;
  const cplx f = (*f_interp[static_cast<size_t>(j)])(t);
  if (canonical_type == CanonicalType::plane_slits) return eta + f;
  return (psi(eta) + eta * f + kI * h0) / (1.0 + h0);
}

SlitMapResult rect_slit_map(const DiscretizedBoundary& b, std::span<const double> angles, const SolverOptions& opts) {
  if (b.bounded()) throw GeometryError("rect_slit_map: the preimage must be unbounded");
  if (angles.size() != static_cast<size_t>(b.curve_count())) throw Error("rect_slit_map: one angle per curve");
  PiecewiseConstantFn theta{RealVec(angles.begin(), angles.end())};
  auto sys = std::make_shared<const KernelSystem>(b, theta, 0.0, opts.backend, opts.tree);
  RealVec gamma(static_cast<size_t>(b.size()));
  for (int i = 0; i < b.size(); ++i)
    gamma[static_cast<size_t>(i)] = std::imag(std::polar(1.0, -theta[b.curve_of(i)]) * b.eta()[i]);

  SlitMapResult r;
  r.canonical_type = CanonicalType::plane_slits;
  r.system = sys;
  r.rh = solve_theorem1(*sys, gamma, opts);
  r.angles = theta.values;
  r.Phi_boundary.resize(gamma.size());
  for (size_t i = 0; i < gamma.size(); ++i) r.Phi_boundary[i] = b.eta()[i] + r.rh.f_boundary[i];
  const CplxVec df = trig_derivative(r.rh.f_boundary, b.n());
  r.Phi_prime_boundary.resize(gamma.size());
  for (size_t i = 0; i < gamma.size(); ++i) r.Phi_prime_boundary[i] = b.deta()[i] + df[i];
  for (int j = 0; j < b.curve_count(); ++j)
    r.achieved.push_back(slit_geometry(block_of(r.Phi_boundary, j, b.n()), theta[j], kInf));
  build_interpolants(r);
  return r;
}

SlitMapResult halfplane_slit_map(const DiscretizedBoundary& b, std::span<const double> angles,
                                 const SolverOptions& opts) {
  if (!b.bounded()) throw GeometryError("halfplane_slit_map: the preimage must be bounded");
  for (cplx z : b.curve_eta(0))
    if (std::abs(std::abs(z) - 1.0) > 1e-12) throw GeometryError("halfplane_slit_map: curve 0 must be the unit circle");
  if (angles.size() != static_cast<size_t>(b.m())) throw Error("halfplane_slit_map: one angle per hole");
  PiecewiseConstantFn theta{RealVec(1, 0.0)};
  theta.values.insert(theta.values.end(), angles.begin(), angles.end());
  auto sys = std::make_shared<const KernelSystem>(b, theta, 0.0, opts.backend, opts.tree);
  RealVec gamma(static_cast<size_t>(b.size()), 0.0);
  for (int i = b.n(); i < b.size(); ++i)
    gamma[static_cast<size_t>(i)] = std::imag(std::polar(1.0, -theta[b.curve_of(i)]) * psi(b.eta()[i]));

  SlitMapResult r;
  r.canonical_type = CanonicalType::halfplane_slits;
  r.system = sys;
  r.rh = solve_theorem1(*sys, gamma, opts);
  r.h0 = r.rh.h[0];
  if (std::abs(1.0 + r.h0) < 1e-12) throw Error("halfplane_slit_map: degenerate normalization h0 = -1");
  r.angles = RealVec(angles.begin(), angles.end());
  const size_t N = gamma.size();
  CplxVec zf(N);
  for (size_t i = 0; i < N; ++i) zf[i] = b.eta()[i] * r.rh.f_boundary[i];
  const CplxVec dzf = trig_derivative(zf, b.n());
  r.Phi_boundary.resize(N);
  r.Phi_prime_boundary.resize(N);
  for (size_t i = 0; i < N; ++i) {
    const cplx eta = b.eta()[i];
    if (eta == kI) {
      r.Phi_boundary[i] = cplx(kInf, 0.0);
      r.Phi_prime_boundary[i] = cplx(kInf, 0.0);
      continue;
    }
    r.Phi_boundary[i] = (psi(eta) + zf[i] + kI * r.h0) / (1.0 + r.h0);
    r.Phi_prime_boundary[i] = (dpsi(eta) * b.deta()[i] + dzf[i]) / (1.0 + r.h0);
  }
  for (int j = 1; j < b.curve_count(); ++j)
    r.achieved.push_back(slit_geometry(block_of(r.Phi_boundary, j, b.n()), theta[j], kInf));
  build_interpolants(r);
  return r;
}

double default_ratio(CanonicalType t) { return t == CanonicalType::plane_slits ? 0.2 : 0.1; }

DomainSpec preimage_domain(const PreimageState& s, std::span<const SlitSpec> slits, CanonicalType type) {
  DomainSpec d;
  if (type == CanonicalType::plane_slits) {
    d.bounded = false;
    for (size_t j = 0; j < slits.size(); ++j)
      d.curves.push_back(CurveSpec::ellipse(s.z[j], s.a[j], s.b[j], slits[j].angle));
  } else {
    d.bounded = true;
    d.curves.push_back(CurveSpec::circle(0.0, 1.0));
    for (size_t j = 0; j < slits.size(); ++j)
      d.curves.push_back(CurveSpec::mobius_ellipse(s.z[j], s.a[j], s.b[j], slits[j].angle));
  }
  return d;
}

SlitMapResult find_preimage(std::span<const SlitSpec> slits, CanonicalType type, const PreimageOptions& popts,
                            const SolverOptions& sopts, const std::optional<PreimageState>& initial) {
  validate_slits(slits, type);
  const double r = popts.r;
  if (!(r > 0.0 && r <= 1.0)) throw Error("find_preimage: r must lie in (0, 1]");
  if (!(popts.eps > 0.0)) throw Error("find_preimage: eps must be positive");
  const size_t m = slits.size();

  PreimageState st;
  if (initial) {
    st = *initial;
    if (st.z.size() != m || st.a.size() != m || st.b.size() != m)
      throw Error("find_preimage: initial state does not match the slits");
  } else {
    st.r = r;
    for (const SlitSpec& s : slits) {
      st.z.push_back(s.center);
      st.a.push_back((1.0 - 0.5 * r) * s.length);
      st.b.push_back(r * st.a.back());
    }
  }
  st.k = 0;
  const double ratio = st.r;

  double scale = 0.0;
  for (const SlitSpec& s : slits) scale = std::max({scale, s.length, std::abs(s.center)});
  RealVec angles;
  for (const SlitSpec& s : slits) angles.push_back(s.angle);

  RealVec history;
  std::vector<int> gmres;
  double best = kInf;
  int since_best = 0;
  for (int k = 1;; ++k) {
    if (k > popts.max_iter)
      throw PreimageError("find_preimage: no convergence after " + std::to_string(popts.max_iter) + " iterations",
                          PreimageError::Reason::too_many_iterations, history, st);
    check_state(st, slits, type, history);
    st.k = k;
    const DiscretizedBoundary b = discretize(preimage_domain(st, slits, type), popts.n);
    SlitMapResult res = type == CanonicalType::plane_slits ? rect_slit_map(b, angles, sopts)
                                                           : halfplane_slit_map(b, angles, sopts);
    gmres.push_back(res.rh.gmres_iterations);
    for (size_t j = 0; j < m; ++j) {
      if (!(res.achieved[j].spread <= popts.spread_tol * res.achieved[j].length))
        throw PreimageError("find_preimage: slit image is not straight", PreimageError::Reason::diverging, history,
                            st);
    }
    double err = 0.0;
    for (size_t j = 0; j < m; ++j)
      err += std::abs(res.achieved[j].center - slits[j].center) + std::abs(res.achieved[j].length - slits[j].length);
    err /= static_cast<double>(m);
    history.push_back(err);
    if (err < best) {
      best = err;
      since_best = 0;
    } else {
      ++since_best;
    }
    const bool stalled = err < popts.stall_level * scale && since_best >= popts.stall_window;
    if (err < popts.eps || stalled) {
      res.iterations = k;
      res.final_error = err;
      res.error_history = history;
      res.gmres_history = gmres;
      res.stalled = !(err < popts.eps);
      res.state = st;
      return res;
    }
    if (history.size() >= 6 && err > 10 * history[history.size() - 6])
      throw PreimageError("find_preimage: error grew tenfold over five iterations", PreimageError::Reason::diverging,
                          history, st);

    for (size_t j = 0; j < m; ++j) {
      st.z[j] -= res.achieved[j].center - slits[j].center;
      st.a[j] -= (1.0 - 0.5 * ratio) * (res.achieved[j].length - slits[j].length);
      st.b[j] = ratio * st.a[j];
    }
  }
}

namespace {

// Inverse by the Cauchy integral over the slit boundary. Loses accuracy within
// a few node spacings of a slit, where both sides of the slit are close.
CplxVec cauchy_inverse(const SlitMapResult& m, std::span<const cplx> w) {
  const DiscretizedBoundary& b = m.preimage();
  const size_t N = static_cast<size_t>(b.size());
  const double h = b.dt();
  CplxVec out(w.size());
  if (m.canonical_type == CanonicalType::plane_slits) {
    CplxVec weights(N), values(N);
    for (size_t i = 0; i < N; ++i) {
      weights[i] = h * m.Phi_prime_boundary[i];
      values[i] = b.eta()[i] - m.Phi_boundary[i];
    }
    const CauchyValues cv = cauchy_integral(m.Phi_boundary, weights, values, w, 0.0, false,
                                            m.system->backend(), m.system->tree_options());
    for (size_t i = 0; i < w.size(); ++i) out[i] = w[i] + cv.f[i];
    return out;
  }
  // F = Phi^{-1} o Psi on the disk image; zeta_hat = Psi^{-1}(Phi(eta)) with
  // the pole at eta = i cancelled.
  CplxVec zh(N);
  const double c = 1.0 + m.h0;
  for (size_t i = 0; i < N; ++i) {
    const cplx eta = b.eta()[i];
    const cplx q = eta * m.rh.f_boundary[i] + kI * m.h0;
    const cplx base = kI * (kI + eta);
    zh[i] = kI * (base + (q - kI * c) * (kI - eta)) / (base + (q + kI * c) * (kI - eta));
  }
  const CplxVec dzh = trig_derivative(zh, b.n());
  CplxVec weights(N);
  for (size_t i = 0; i < N; ++i) weights[i] = h * dzh[i];
  CplxVec targets(w.size());
  for (size_t i = 0; i < w.size(); ++i) targets[i] = mobius_inv(w[i]);
  const CauchyValues cv = cauchy_integral(zh, weights, b.eta(), targets, 1.0, false, m.system->backend(),
                                          m.system->tree_options());
  return cv.f;
}

bool newton_polish(const SlitMapResult& m, const PointLocator& loc, cplx target, cplx& z, int iters) {
  const double tol = 1e-11 * (1.0 + std::abs(target));
  for (int it = 0; it <= iters; ++it) {
    CplxVec phi, dphi;
    m.map_with_derivative(std::span<const cplx>(&z, 1), phi, dphi);
    const cplx r = phi[0] - target;
    if (!std::isfinite(std::abs(r))) return false;
    if (std::abs(r) <= tol) break;
    if (it == iters) return false;
    z -= r / dphi[0];
  }
  const Location where = loc(z).where;
  return where == Location::fluid || where == Location::near_boundary;
}

}  // namespace

CplxVec inverse_map(const SlitMapResult& m, std::span<const cplx> w) {
  // targets on a slit
  for (size_t i = 0; i < w.size(); ++i) {
    if (m.canonical_type == CanonicalType::halfplane_slits && !(w[i].imag() > 0))
      throw GeometryError("inverse_map: target outside the upper half-plane");
    for (size_t j = 0; j < m.achieved.size(); ++j) {
      const SlitGeometry& g = m.achieved[j];
      const cplx d = 0.5 * g.length * std::polar(1.0, m.angles[j]);
      if (distance_to_segment(w[i], g.center - d, g.center + d) <= 1e-10 * (1 + g.length))
        throw GeometryError("inverse_map: target lies on slit " + std::to_string(j));
    }
  }
  CplxVec z = cauchy_inverse(m, w);
  const PointLocator loc(m.preimage());
  const DiscretizedBoundary& b = m.preimage();
  for (size_t i = 0; i < w.size(); ++i) {
    if (newton_polish(m, loc, w[i], z[i], 6)) continue;
    // continuation from a point moved off the nearest slit
    size_t jn = 0;
    double dn = kInf;
    cplx pn{};
    for (size_t j = 0; j < m.achieved.size(); ++j) {
      const SlitGeometry& g = m.achieved[j];
      const cplx d = 0.5 * g.length * std::polar(1.0, m.angles[j]);
      const double dist = distance_to_segment(w[i], g.center - d, g.center + d);
      if (dist < dn) {
        dn = dist;
        jn = j;
        const cplx e = 2.0 * d;
        const double t = std::clamp(((w[i] - g.center + d) * std::conj(e)).real() / std::norm(e), 0.0, 1.0);
        pn = g.center - d + t * e;
      }
    }
    const int curve = static_cast<int>(jn) + m.first_slit_curve();
    double spacing = 0.0;
    for (int q = 0; q < b.n(); ++q)
      spacing = std::max(spacing, std::abs(m.Phi_prime_boundary[static_cast<size_t>(curve * b.n() + q)]));
    spacing *= b.dt();
    const cplx far = w[i] + 8.0 * spacing * (w[i] - pn) / std::abs(w[i] - pn);
    cplx zc = cauchy_inverse(m, std::span<const cplx>(&far, 1))[0];
    bool ok = newton_polish(m, loc, far, zc, 6);
    const int steps = 16;
    for (int s = 1; ok && s <= steps; ++s) ok = newton_polish(m, loc, far + (w[i] - far) * (double(s) / steps), zc, 8);
    if (!ok) throw GeometryError("inverse_map: no accurate preimage for target " + std::to_string(i));
    z[i] = zc;
  }
  return z;
}

CplxVec SlitFlow::velocity_at_preimage(std::span<const cplx> z) const {
  const FlowSolution::Values v = flow->evaluate(z, false);
  CplxVec phi, dphi;
  map.map_with_derivative(z, phi, dphi);
  CplxVec out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = std::conj(v.dw[i] / dphi[i]);
  return out;
}

BCResidual SlitFlow::bc_residual() const {
  return flow->bc_residual([this](int j, double t) { return map.boundary_image(j, t); });
}

SlitFlow solve_slit_flow(std::span<const SlitSpec> slits, CanonicalType type, const PreimageOptions& popts,
                         const SolverOptions& sopts) {
  SlitFlow sf;
  sf.map = find_preimage(slits, type, popts, sopts);
  const DiscretizedBoundary& b = sf.map.preimage();
  StirrerProblem p;
  p.domain = domain_from(b);
  if (type == CanonicalType::halfplane_slits) {
    p.U.push_back(0.0);
    p.chi.push_back(0.0);
  }
  for (const SlitSpec& s : slits) {
    p.U.push_back(s.U);
    p.chi.push_back(s.chi);
  }
  sf.flow.emplace(solve_flow(p, b, sf.map.Phi_boundary, sopts));
  return sf;
}

FieldGrid slit_flow_grid(const SlitFlow& sf, const GridSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw Error("slit_flow_grid: empty grid");
  const bool half = sf.map.canonical_type == CanonicalType::halfplane_slits;
  const size_t total = static_cast<size_t>(spec.nx) * spec.ny;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FieldGrid g;
  g.spec = spec;
  g.mask.assign(total, Location::fluid);
  for (RealVec* v : {&g.psi, &g.phi, &g.u, &g.v, &g.x, &g.y}) v->assign(total, nan);

  PointLocator loc(sf.map.preimage());
  std::vector<cplx> pre(total);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long c = 0; c < static_cast<long long>(total); ++c) {
    const cplx p(spec.x(static_cast<int>(c % spec.nx)), spec.y(static_cast<int>(c / spec.nx)));
    if (half && !(p.imag() > 0)) {
      g.mask[static_cast<size_t>(c)] = Location::outside_vessel;
      continue;
    }
    const cplx z = half ? mobius_inv(p) : p;
    pre[static_cast<size_t>(c)] = z;
    g.mask[static_cast<size_t>(c)] = loc(z).where;
  }
  std::vector<cplx> targets;
  std::vector<size_t> where;
  for (size_t c = 0; c < total; ++c) {
    if (g.mask[c] != Location::fluid) continue;
    targets.push_back(pre[c]);
    where.push_back(c);
  }
  if (targets.empty()) throw GeometryError("slit_flow_grid: no grid point lies in the fluid");
  const FlowSolution::Values v = sf.flow->evaluate(targets, false);
  CplxVec phi, dphi;
  sf.map.map_with_derivative(targets, phi, dphi);
  for (size_t q = 0; q < targets.size(); ++q) {
    const size_t c = where[q];
    const cplx vel = std::conj(v.dw[q] / dphi[q]);
    g.psi[c] = v.w[q].imag();
    g.phi[c] = v.w[q].real();
    g.u[c] = vel.real();
    g.v[c] = vel.imag();
    g.x[c] = phi[q].real();
    g.y[c] = phi[q].imag();
  }
  return g;
}

}  // namespace stirflow
