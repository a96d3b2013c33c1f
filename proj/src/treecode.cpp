#include "stirflow/treecode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace stirflow {

DirectCauchySum::DirectCauchySum(std::span<const cplx> sources, std::optional<std::span<const cplx>> targets)
    : self_(!targets.has_value()) {
  sx_.reserve(sources.size());
  sy_.reserve(sources.size());
  for (cplx s : sources) {
    sx_.push_back(s.real());
    sy_.push_back(s.imag());
  }
  if (self_) {
    tx_ = sx_;
    ty_ = sy_;
  } else {
    for (cplx t : *targets) {
      tx_.push_back(t.real());
      ty_.push_back(t.imag());
    }
  }
}

namespace {

// Accumulates sum q / (t - s) over sources [lo, hi).
inline void direct_range(const double* sx, const double* sy, const double* qr, const double* qi, size_t lo,
                         size_t hi, double tx, double ty, double& re, double& im) {
  double ar = 0.0, ai = 0.0;
#pragma omp simd reduction(+ : ar, ai)
  for (size_t j = lo; j < hi; ++j) {
    const double dx = tx - sx[j], dy = ty - sy[j];
    const double inv = 1.0 / (dx * dx + dy * dy);
    ar += (qr[j] * dx + qi[j] * dy) * inv;
    ai += (qi[j] * dx - qr[j] * dy) * inv;
  }
  re += ar;
  im += ai;
}

// Accumulates sum -q / (t - s)^2 over sources [lo, hi).
inline void direct_range_d(const double* sx, const double* sy, const double* qr, const double* qi, size_t lo,
                           size_t hi, double tx, double ty, double& re, double& im) {
  double ar = 0.0, ai = 0.0;
#pragma omp simd reduction(+ : ar, ai)
  for (size_t j = lo; j < hi; ++j) {
    const double dx = tx - sx[j], dy = ty - sy[j];
    const double inv = 1.0 / (dx * dx + dy * dy);
    const double kr = (dx * dx - dy * dy) * inv * inv, ki = -2.0 * dx * dy * inv * inv;
    ar -= qr[j] * kr - qi[j] * ki;
    ai -= qr[j] * ki + qi[j] * kr;
  }
  re += ar;
  im += ai;
}

}  // namespace

void DirectCauchySum::apply(std::span<const cplx> q, std::span<cplx> phi, std::span<cplx> dphi) const {
  const size_t ns = sx_.size(), nt = tx_.size();
  if (q.size() != ns || phi.size() != nt || (!dphi.empty() && dphi.size() != nt))
    throw Error("cauchy sum: length mismatch");
  RealVec qr(ns), qi(ns);
  for (size_t j = 0; j < ns; ++j) {
    qr[j] = q[j].real();
    qi[j] = q[j].imag();
  }
  const bool want_d = !dphi.empty();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(nt); ++i) {
    const size_t ii = static_cast<size_t>(i);
    double re = 0.0, im = 0.0, dre = 0.0, dim = 0.0;
    if (self_) {
      direct_range(sx_.data(), sy_.data(), qr.data(), qi.data(), 0, ii, tx_[ii], ty_[ii], re, im);
      direct_range(sx_.data(), sy_.data(), qr.data(), qi.data(), ii + 1, ns, tx_[ii], ty_[ii], re, im);
      if (want_d) {
        direct_range_d(sx_.data(), sy_.data(), qr.data(), qi.data(), 0, ii, tx_[ii], ty_[ii], dre, dim);
        direct_range_d(sx_.data(), sy_.data(), qr.data(), qi.data(), ii + 1, ns, tx_[ii], ty_[ii], dre, dim);
      }
    } else {
      direct_range(sx_.data(), sy_.data(), qr.data(), qi.data(), 0, ns, tx_[ii], ty_[ii], re, im);
      if (want_d) direct_range_d(sx_.data(), sy_.data(), qr.data(), qi.data(), 0, ns, tx_[ii], ty_[ii], dre, dim);
    }
    phi[ii] = {re, im};
    if (want_d) dphi[ii] = {dre, dim};
  }
}

namespace {

struct Node {
  cplx center;
  double radius = 0.0;  // max distance of contained points from center
  int begin = 0, end = 0;
  int parent = -1;
  std::array<int, 4> child{-1, -1, -1, -1};
  bool leaf = true;

  int count() const { return end - begin; }
};

struct Tree {
  std::vector<Node> nodes;
  std::vector<int> perm;  // tree order -> original index
  CplxVec pts;            // points in tree order

  void build(std::span<const cplx> points, int leaf_size) {
    const int n = static_cast<int>(points.size());
    perm.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (cplx p : points) {
      x0 = std::min(x0, p.real());
      x1 = std::max(x1, p.real());
      y0 = std::min(y0, p.imag());
      y1 = std::max(y1, p.imag());
    }
    if (n == 0) x0 = x1 = y0 = y1 = 0.0;
    const double half = 0.5 * std::max({x1 - x0, y1 - y0, 1e-300}) * (1.0 + 1e-12);
    nodes.clear();
    nodes.push_back(Node{});
    split(points, 0, cplx(0.5 * (x0 + x1), 0.5 * (y0 + y1)), half, 0, n, leaf_size, 0);
    pts.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pts[static_cast<size_t>(i)] = points[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    for (auto& nd : nodes) {
      double r = 0.0;
      for (int i = nd.begin; i < nd.end; ++i) r = std::max(r, std::abs(pts[static_cast<size_t>(i)] - nd.center));
      nd.radius = r;
    }
  }

  void split(std::span<const cplx> points, int idx, cplx c, double half, int begin, int end, int leaf_size,
             int depth) {
    Node& nd = nodes[static_cast<size_t>(idx)];
    nd.center = c;
    nd.begin = begin;
    nd.end = end;
    if (end - begin <= leaf_size || depth >= 48) return;
    // partition into quadrants: 0 = (-,-), 1 = (+,-), 2 = (-,+), 3 = (+,+)
    auto quad = [&](int i) {
      const cplx p = points[static_cast<size_t>(i)];
      return (p.real() >= c.real() ? 1 : 0) + (p.imag() >= c.imag() ? 2 : 0);
    };
    std::array<int, 5> bounds{};
    auto first = perm.begin() + begin, last = perm.begin() + end;
    std::stable_sort(first, last, [&](int a, int b) { return quad(a) < quad(b); });
    bounds[0] = begin;
    for (int qd = 0; qd < 4; ++qd) {
      auto it = std::partition_point(perm.begin() + bounds[qd], last, [&](int i) { return quad(i) <= qd; });
      bounds[qd + 1] = static_cast<int>(it - perm.begin());
    }
    nodes[static_cast<size_t>(idx)].leaf = false;
    for (int qd = 0; qd < 4; ++qd) {
      if (bounds[qd + 1] == bounds[qd]) continue;
      const double h = 0.5 * half;
      const cplx cc = c + cplx((qd & 1) ? h : -h, (qd & 2) ? h : -h);
      const int ci = static_cast<int>(nodes.size());
      nodes.push_back(Node{});
      nodes[static_cast<size_t>(ci)].parent = idx;
      nodes[static_cast<size_t>(idx)].child[static_cast<size_t>(qd)] = ci;
      split(points, ci, cc, h, bounds[qd], bounds[qd + 1], leaf_size, depth + 1);
    }
  }
};

}  // namespace

struct TreeCauchySum::Impl {
  TreecodeOptions opts;
  bool self = true;
  Tree src, tgt_own;
  const Tree* tgt = nullptr;
  std::vector<std::vector<int>> m2l;  // per target node: source nodes
  std::vector<std::vector<int>> p2p;  // per target leaf: source nodes
  std::vector<int> m2l_sources;       // source nodes needing a multipole
  std::vector<int> target_leaves;
  RealVec binom;                      // binom[a * (2p) + b] = C(a, b)

  double C(int a, int b) const { return binom[static_cast<size_t>(a) * (2 * opts.order) + static_cast<size_t>(b)]; }

  void traverse(int a, int b) {
    const Node& A = tgt->nodes[static_cast<size_t>(a)];
    const Node& B = src.nodes[static_cast<size_t>(b)];
    if (self && a == b) {
      if (A.leaf) {
        p2p[static_cast<size_t>(a)].push_back(b);
        return;
      }
      for (int ca : A.child)
        if (ca >= 0)
          for (int cb : A.child)
            if (cb >= 0) traverse(ca, cb);
      return;
    }
    const double dist = std::abs(A.center - B.center);
    const double order2 = static_cast<double>(opts.order) * opts.order;
    if (A.radius + B.radius < opts.theta * dist) {
      if (A.leaf && static_cast<double>(A.count()) * B.count() <= order2) {
        p2p[static_cast<size_t>(a)].push_back(b);
      } else {
        m2l[static_cast<size_t>(a)].push_back(b);
      }
      return;
    }
    if (A.leaf && B.leaf) {
      p2p[static_cast<size_t>(a)].push_back(b);
      return;
    }
    const bool split_a = B.leaf || (!A.leaf && A.radius >= B.radius);
    if (split_a) {
      for (int ca : A.child)
        if (ca >= 0) traverse(ca, b);
    } else {
      for (int cb : B.child)
        if (cb >= 0) traverse(a, cb);
    }
  }
};

TreeCauchySum::TreeCauchySum(std::span<const cplx> sources, std::optional<std::span<const cplx>> targets,
                             const TreecodeOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.opts = opts;
  s.self = !targets.has_value();
  s.src.build(sources, opts.leaf_size);
  if (s.self) {
    s.tgt = &s.src;
  } else {
    s.tgt_own.build(*targets, opts.leaf_size);
    s.tgt = &s.tgt_own;
  }
  const size_t tn = s.tgt->nodes.size();
  s.m2l.assign(tn, {});
  s.p2p.assign(tn, {});
  if (!sources.empty() && !s.tgt->pts.empty()) s.traverse(0, 0);

  std::vector<char> used(s.src.nodes.size(), 0);
  for (const auto& lst : s.m2l)
    for (int b : lst) used[static_cast<size_t>(b)] = 1;
  for (size_t b = 0; b < used.size(); ++b)
    if (used[b]) s.m2l_sources.push_back(static_cast<int>(b));
  for (size_t a = 0; a < tn; ++a)
    if (s.tgt->nodes[a].leaf) s.target_leaves.push_back(static_cast<int>(a));

  const int P2 = 2 * opts.order;
  s.binom.assign(static_cast<size_t>(P2) * P2, 0.0);
  for (int a = 0; a < P2; ++a) {
    s.binom[static_cast<size_t>(a) * P2] = 1.0;
    for (int b = 1; b <= a; ++b)
      s.binom[static_cast<size_t>(a) * P2 + b] =
          s.binom[static_cast<size_t>(a - 1) * P2 + b - 1] + (b <= a - 1 ? s.binom[static_cast<size_t>(a - 1) * P2 + b] : 0.0);
  }
}

TreeCauchySum::~TreeCauchySum() = default;

size_t TreeCauchySum::target_count() const { return impl_->tgt->pts.size(); }

void TreeCauchySum::apply(std::span<const cplx> q, std::span<cplx> phi, std::span<cplx> dphi) const {
  const Impl& s = *impl_;
  const Tree& src = s.src;
  const Tree& tgt = *s.tgt;
  const int p = s.opts.order;
  if (q.size() != src.pts.size() || phi.size() != tgt.pts.size() || (!dphi.empty() && dphi.size() != phi.size()))
    throw Error("cauchy sum: length mismatch");
  const bool want_d = !dphi.empty();

  CplxVec qt(q.size());
  for (size_t i = 0; i < q.size(); ++i) qt[i] = q[static_cast<size_t>(src.perm[i])];

  // scaled multipoles: a_k = sum q ((s - c) / r)^k
  CplxVec mp(src.nodes.size() * static_cast<size_t>(p));
#pragma omp parallel for schedule(dynamic, 16)
  for (long ii = 0; ii < static_cast<long>(s.m2l_sources.size()); ++ii) {
    const int b = s.m2l_sources[static_cast<size_t>(ii)];
    const Node& B = src.nodes[static_cast<size_t>(b)];
    const double r = B.radius > 0 ? B.radius : 1.0;
    cplx* a = &mp[static_cast<size_t>(b) * p];
    for (int i = B.begin; i < B.end; ++i) {
      const cplx u = (src.pts[static_cast<size_t>(i)] - B.center) / r;
      cplx term = qt[static_cast<size_t>(i)];
      for (int k = 0; k < p; ++k) {
        a[k] += term;
        term *= u;
      }
    }
  }

  // scaled locals: phi(z) = sum_l L_l ((z - c) / r)^l
  CplxVec loc(tgt.nodes.size() * static_cast<size_t>(p));
#pragma omp parallel for schedule(dynamic, 16)
  for (long ai = 0; ai < static_cast<long>(tgt.nodes.size()); ++ai) {
    const auto& lst = s.m2l[static_cast<size_t>(ai)];
    if (lst.empty()) continue;
    const Node& A = tgt.nodes[static_cast<size_t>(ai)];
    const double rl = A.radius > 0 ? A.radius : 1.0;
    cplx* L = &loc[static_cast<size_t>(ai) * p];
    CplxVec u(static_cast<size_t>(p));
    for (int b : lst) {
      const Node& B = src.nodes[static_cast<size_t>(b)];
      const double rs = B.radius > 0 ? B.radius : 1.0;
      const cplx D = B.center - A.center;
      const cplx* a = &mp[static_cast<size_t>(b) * p];
      const cplx ps = rs / D, pl = rl / D;
      cplx pw = -1.0;
      for (int k = 0; k < p; ++k) {
        u[static_cast<size_t>(k)] = pw * a[k];
        pw *= -ps;
      }
      cplx lw = 1.0 / D;
      for (int l = 0; l < p; ++l) {
        cplx acc{};
        for (int k = 0; k < p; ++k) acc += s.C(l + k, k) * u[static_cast<size_t>(k)];
        L[l] += lw * acc;
        lw *= pl;
      }
    }
  }

  CplxVec out(phi.size()), dout(want_d ? phi.size() : 0);
  RealVec sx(src.pts.size()), sy(src.pts.size()), qr(src.pts.size()), qi(src.pts.size());
  for (size_t i = 0; i < src.pts.size(); ++i) {
    sx[i] = src.pts[i].real();
    sy[i] = src.pts[i].imag();
    qr[i] = qt[i].real();
    qi[i] = qt[i].imag();
  }

#pragma omp parallel for schedule(dynamic, 8)
  for (long li = 0; li < static_cast<long>(s.target_leaves.size()); ++li) {
    const int leaf = s.target_leaves[static_cast<size_t>(li)];
    const Node& Lf = tgt.nodes[static_cast<size_t>(leaf)];
    for (int i = Lf.begin; i < Lf.end; ++i) {
      const cplx z = tgt.pts[static_cast<size_t>(i)];
      cplx val{}, dval{};
      // locals of this leaf and all its ancestors
      for (int x = leaf; x >= 0; x = tgt.nodes[static_cast<size_t>(x)].parent) {
        if (s.m2l[static_cast<size_t>(x)].empty()) continue;
        const Node& X = tgt.nodes[static_cast<size_t>(x)];
        const double r = X.radius > 0 ? X.radius : 1.0;
        const cplx w = (z - X.center) / r;
        const cplx* L = &loc[static_cast<size_t>(x) * p];
        cplx acc = L[p - 1], dacc{};
        for (int l = p - 1; l >= 1; --l) {
          dacc = dacc * w + acc;
          acc = acc * w + L[l - 1];
        }
        val += acc;
        dval += dacc / r;
      }
      double re = val.real(), im = val.imag(), dre = dval.real(), dim = dval.imag();
      const double tx = z.real(), ty = z.imag();
      for (int b : s.p2p[static_cast<size_t>(leaf)]) {
        const Node& B = src.nodes[static_cast<size_t>(b)];
        const size_t lo = static_cast<size_t>(B.begin), hi = static_cast<size_t>(B.end);
        if (s.self && b == leaf) {
          const size_t self_i = static_cast<size_t>(i);
          direct_range(sx.data(), sy.data(), qr.data(), qi.data(), lo, self_i, tx, ty, re, im);
          direct_range(sx.data(), sy.data(), qr.data(), qi.data(), self_i + 1, hi, tx, ty, re, im);
          if (want_d) {
            direct_range_d(sx.data(), sy.data(), qr.data(), qi.data(), lo, self_i, tx, ty, dre, dim);
            direct_range_d(sx.data(), sy.data(), qr.data(), qi.data(), self_i + 1, hi, tx, ty, dre, dim);
          }
        } else {
          direct_range(sx.data(), sy.data(), qr.data(), qi.data(), lo, hi, tx, ty, re, im);
          if (want_d) direct_range_d(sx.data(), sy.data(), qr.data(), qi.data(), lo, hi, tx, ty, dre, dim);
        }
      }
      const size_t orig = static_cast<size_t>(tgt.perm[static_cast<size_t>(i)]);
      out[orig] = {re, im};
      if (want_d) dout[orig] = {dre, dim};
    }
  }
  std::copy(out.begin(), out.end(), phi.begin());
  if (want_d) std::copy(dout.begin(), dout.end(), dphi.begin());
}

std::unique_ptr<CauchySum> make_cauchy_sum(MatvecBackend backend, std::span<const cplx> sources,
                                           std::optional<std::span<const cplx>> targets,
                                           const TreecodeOptions& opts) {
  if (backend == MatvecBackend::treecode) return std::make_unique<TreeCauchySum>(sources, targets, opts);
  return std::make_unique<DirectCauchySum>(sources, targets);
}

}  // namespace stirflow
