#include "stirflow/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace stirflow {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

// Object reader that remembers which keys were consumed.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) {
    seen_.insert(k);
    if (!j_.contains(k)) fail(join(path_, k), "missing required key");
    return j_.at(k);
  }
  const json* get(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) ? &j_.at(k) : nullptr;
  }
  std::string path(const std::string& k) const { return join(path_, k); }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(join(path_, it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0)) fail(path, "must be positive");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long long>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

cplx point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [x, y]");
  return {number(j[0], index_path(path, 0)), number(j[1], index_path(path, 1))};
}

json point_json(cplx z) { return json::array({z.real(), z.imag()}); }

struct Draws {
  std::mt19937_64 rng;
  cplx direction() {
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    return std::polar(1.0, u(rng));
  }
  double circulation() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return u(rng);
  }
  double uniform(double a, double b) {
    std::uniform_real_distribution<double> u(a, b);
    return u(rng);
  }
};

// velocity: [u, v] or "random" (unit modulus, uniform direction)
cplx velocity(const json* j, const std::string& path, Draws& d) {
  if (!j) return 0.0;
  if (j->is_string()) {
    if (j->get<std::string>() != "random") fail(path, "expected [u, v] or \"random\"");
    return d.direction();
  }
  return point(*j, path);
}

// circulation: number or "random" (uniform in [-1, 1])
double circulation(const json* j, const std::string& path, Draws& d) {
  if (!j) return 0.0;
  if (j->is_string()) {
    if (j->get<std::string>() != "random") fail(path, "expected a number or \"random\"");
    return d.circulation();
  }
  return number(*j, path);
}

struct ParsedCurve {
  CurveSpec spec;
  cplx U{};
  double chi = 0.0;
  std::optional<cplx> anchor;
  json echo;
};

ParsedCurve parse_curve(const json& j, const std::string& path, Draws& d) {
  Obj o(j, path);
  ParsedCurve c;
  const std::string type = string(o.at("type"), o.path("type"));
  c.echo["type"] = type;
  if (type == "circle") {
    const cplx z = point(o.at("center"), o.path("center"));
    const double r = positive(o.at("radius"), o.path("radius"));
    c.spec = CurveSpec::circle(z, r);
    c.echo["center"] = point_json(z);
    c.echo["radius"] = r;
  } else if (type == "ellipse") {
    const cplx z = point(o.at("center"), o.path("center"));
    const double a = positive(o.at("a"), o.path("a"));
    const double b = positive(o.at("b"), o.path("b"));
    const json* rot = o.get("rotation");
    const double t = rot ? number(*rot, o.path("rotation")) : 0.0;
    c.spec = CurveSpec::ellipse(z, a, b, t);
    c.echo["center"] = point_json(z);
    c.echo["a"] = a;
    c.echo["b"] = b;
    c.echo["rotation"] = t;
  } else if (type == "polygon") {
    const json& v = o.at("vertices");
    if (!v.is_array() || v.size() < 3) fail(o.path("vertices"), "expected at least three [x, y] vertices");
    std::vector<cplx> verts;
    for (size_t i = 0; i < v.size(); ++i) verts.push_back(point(v[i], index_path(o.path("vertices"), i)));
    c.spec = CurveSpec::polygon(verts);
    c.echo["vertices"] = json::array();
    for (cplx z : verts) c.echo["vertices"].push_back(point_json(z));
  } else {
    fail(o.path("type"), "unknown curve type '" + type + "' (circle, ellipse, polygon)");
  }
  c.U = velocity(o.get("velocity"), o.path("velocity"), d);
  c.chi = circulation(o.get("circulation"), o.path("circulation"), d);
  if (const json* a = o.get("anchor")) c.anchor = point(*a, o.path("anchor"));
  c.echo["velocity"] = point_json(c.U);
  c.echo["circulation"] = c.chi;
  if (c.anchor) c.echo["anchor"] = point_json(*c.anchor);
  o.finish();
  return c;
}

// Non-overlapping circles drawn uniformly in a box.
std::vector<ParsedCurve> random_circles(const json& j, const std::string& path, Draws& d,
                                        const std::vector<ParsedCurve>& existing, bool bounded) {
  Obj o(j, path);
  const long long count = integer(o.at("count"), o.path("count"));
  if (count < 1) fail(o.path("count"), "must be at least 1");
  double rmin, rmax;
  const json& rj = o.at("radius");
  if (rj.is_array()) {
    if (rj.size() != 2) fail(o.path("radius"), "expected a number or [min, max]");
    rmin = positive(rj[0], index_path(o.path("radius"), 0));
    rmax = positive(rj[1], index_path(o.path("radius"), 1));
    if (rmax < rmin) fail(o.path("radius"), "max below min");
  } else {
    rmin = rmax = positive(rj, o.path("radius"));
  }
  const json& bj = o.at("box");
  if (!bj.is_array() || bj.size() != 4) fail(o.path("box"), "expected [x_min, x_max, y_min, y_max]");
  double box[4];
  for (size_t i = 0; i < 4; ++i) box[i] = number(bj[i], index_path(o.path("box"), i));
  if (!(box[1] - box[0] > 2 * rmax) || !(box[3] - box[2] > 2 * rmax)) fail(o.path("box"), "box too small");
  const json* gj = o.get("gap");
  const double gap = gj ? number(*gj, o.path("gap")) : 0.5 * rmin;
  if (gap < 0) fail(o.path("gap"), "must be non-negative");
  const json* vj = o.get("velocity");
  const json* cj = o.get("circulation");
  o.finish();

  // existing stirrer circles; the vessel wall is left to the discretization check
  std::vector<std::pair<cplx, double>> taken;
  for (size_t j = bounded ? 1 : 0; j < existing.size(); ++j) {
    const ParsedCurve& c = existing[j];
    if (c.spec.kind == CurveKind::circle) taken.push_back({c.spec.center, 0.5 * c.spec.a});
  }
  std::vector<ParsedCurve> out;
  const long long max_attempts = 2000 * count + 100000;
  long long attempts = 0;
  while (static_cast<long long>(out.size()) < count) {
    if (++attempts > max_attempts)
      fail(path, "could not place " + std::to_string(count) + " circles (placed " + std::to_string(out.size()) + ")");
    const double r = rmin == rmax ? rmin : d.uniform(rmin, rmax);
    const cplx z(d.uniform(box[0] + r, box[1] - r), d.uniform(box[2] + r, box[3] - r));
    bool ok = true;
    for (const auto& [c, rc] : taken)
      if (std::abs(z - c) < r + rc + gap) {
        ok = false;
        break;
      }
    if (!ok) continue;
    taken.push_back({z, r});
    ParsedCurve pc;
    pc.spec = CurveSpec::circle(z, r);
    pc.U = velocity(vj, join(path, "velocity"), d);
    pc.chi = circulation(cj, join(path, "circulation"), d);
    pc.echo = {{"type", "circle"}, {"center", point_json(z)}, {"radius", r},
               {"velocity", point_json(pc.U)}, {"circulation", pc.chi}};
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::stirrers: return "stirrers";
    case RunMode::slit_stirrers: return "slit_stirrers";
    case RunMode::slit_map_only: return "slit_map_only";
  }
  return "?";
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
  }
  Obj o(root, "");
  RunConfig cfg;

  const std::string mode = string(o.at("mode"), "mode");
  if (mode == "stirrers") cfg.mode = RunMode::stirrers;
  else if (mode == "slit_stirrers") cfg.mode = RunMode::slit_stirrers;
  else if (mode == "slit_map_only") cfg.mode = RunMode::slit_map_only;
  else fail("mode", "unknown mode '" + mode + "' (stirrers, slit_stirrers, slit_map_only)");

  if (const json* s = o.get("seed")) {
    const long long v = integer(*s, "seed");
    if (v < 0) fail("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  Draws draws{std::mt19937_64(cfg.seed)};
  json echo;
  echo["mode"] = mode;
  echo["seed"] = cfg.seed;

  // solver
  {
    json e;
    if (const json* sj = o.get("solver")) {
      Obj s(*sj, "solver");
      if (const json* v = s.get("n")) {
        const long long n = integer(*v, "solver.n");
        if (n < 8 || n % 2 != 0) fail("solver.n", "must be an even integer >= 8");
        if (n > (1 << 22)) fail("solver.n", "too large");
        cfg.n = static_cast<int>(n);
      }
      if (const json* v = s.get("gmres_tol")) cfg.solver.gmres_tol = positive(*v, "solver.gmres_tol");
      if (const json* v = s.get("max_iterations")) {
        const long long m = integer(*v, "solver.max_iterations");
        if (m < 1) fail("solver.max_iterations", "must be at least 1");
        cfg.solver.max_iterations = static_cast<int>(m);
      }
      if (const json* v = s.get("grading_p")) {
        const long long p = integer(*v, "solver.grading_p");
        if (p < 1) fail("solver.grading_p", "must be at least 1");
        cfg.grading_p = static_cast<int>(p);
      }
      if (const json* v = s.get("matvec_backend")) {
        const std::string b = string(*v, "solver.matvec_backend");
        if (b == "dense") cfg.solver.backend = MatvecBackend::dense;
        else if (b == "treecode") cfg.solver.backend = MatvecBackend::treecode;
        else fail("solver.matvec_backend", "expected \"dense\" or \"treecode\"");
      }
      s.finish();
    }
    e["n"] = cfg.n;
    e["gmres_tol"] = cfg.solver.gmres_tol;
    e["max_iterations"] = cfg.solver.max_iterations;
    e["grading_p"] = cfg.grading_p;
    e["matvec_backend"] = cfg.solver.backend == MatvecBackend::dense ? "dense" : "treecode";
    echo["solver"] = e;
  }

  const bool slit_mode = cfg.mode != RunMode::stirrers;
  if (slit_mode) {
    if (o.has("domain")) fail("domain", "not allowed in slit modes");
    json e;
    std::optional<double> r;
    if (const json* sj = o.get("slit")) {
      Obj s(*sj, "slit");
      if (const json* v = s.get("canonical")) {
        const std::string c = string(*v, "slit.canonical");
        if (c == "plane") cfg.canonical = CanonicalType::plane_slits;
        else if (c == "halfplane") cfg.canonical = CanonicalType::halfplane_slits;
        else fail("slit.canonical", "expected \"plane\" or \"halfplane\"");
      }
      if (const json* v = s.get("r")) {
        r = number(*v, "slit.r");
        if (!(*r > 0 && *r <= 1)) fail("slit.r", "must lie in (0, 1]");
      }
      if (const json* v = s.get("eps")) cfg.slit.eps = positive(*v, "slit.eps");
      if (const json* v = s.get("max_iter")) {
        const long long m = integer(*v, "slit.max_iter");
        if (m < 0) fail("slit.max_iter", "must be non-negative");
        cfg.slit.max_iter = static_cast<int>(m);
      }
      s.finish();
    }
    cfg.slit.r = r ? *r : default_ratio(cfg.canonical);
    cfg.slit.n = cfg.n;
    e["canonical"] = cfg.canonical == CanonicalType::plane_slits ? "plane" : "halfplane";
    e["r"] = cfg.slit.r;
    e["eps"] = cfg.slit.eps;
    e["max_iter"] = cfg.slit.max_iter;
    echo["slit"] = e;

    const json& sl = o.at("slits");
    if (!sl.is_array() || sl.empty()) fail("slits", "expected a non-empty array");
    json se = json::array();
    for (size_t i = 0; i < sl.size(); ++i) {
      const std::string p = index_path("slits", i);
      Obj s(sl[i], p);
      SlitSpec spec;
      spec.center = point(s.at("center"), s.path("center"));
      spec.length = positive(s.at("length"), s.path("length"));
      if (const json* v = s.get("angle")) spec.angle = number(*v, s.path("angle"));
      const json* vj = s.get("velocity");
      const json* cj = s.get("circulation");
      if (cfg.mode == RunMode::slit_map_only && (vj || cj))
        fail(vj ? s.path("velocity") : s.path("circulation"), "not used in slit_map_only mode");
      spec.U = velocity(vj, s.path("velocity"), draws);
      spec.chi = circulation(cj, s.path("circulation"), draws);
      s.finish();
      json je = {{"center", point_json(spec.center)}, {"length", spec.length}, {"angle", spec.angle}};
      if (cfg.mode == RunMode::slit_stirrers) {
        je["velocity"] = point_json(spec.U);
        je["circulation"] = spec.chi;
      }
      se.push_back(je);
      cfg.slits.push_back(spec);
    }
    echo["slits"] = se;
  } else {
    if (o.has("slits")) fail("slits", "only allowed in slit modes");
    if (o.has("slit")) fail("slit", "only allowed in slit modes");
    Obj d(o.at("domain"), "domain");
    const json* bj = d.get("bounded");
    if (bj && !bj->is_boolean()) fail("domain.bounded", "expected true or false");
    cfg.problem.domain.bounded = bj ? bj->get<bool>() : false;
    std::vector<ParsedCurve> curves;
    if (const json* cj = d.get("curves")) {
      if (!cj->is_array()) fail("domain.curves", "expected an array");
      for (size_t i = 0; i < cj->size(); ++i)
        curves.push_back(parse_curve((*cj)[i], index_path("domain.curves", i), draws));
    }
    if (const json* rj = d.get("random_circles")) {
      auto extra = random_circles(*rj, "domain.random_circles", draws, curves, cfg.problem.domain.bounded);
      for (auto& c : extra) curves.push_back(std::move(c));
    }
    if (curves.empty()) fail("domain.curves", "at least one curve is required");
    if (cfg.problem.domain.bounded) {
      if (curves.size() < 1) fail("domain.curves", "a bounded domain needs the vessel curve first");
      if (curves[0].U != cplx{} || curves[0].chi != 0.0)
        fail("domain.curves[0]", "the vessel wall does not move and carries no circulation");
    }
    std::optional<cplx> alpha;
    if (const json* aj = d.get("alpha")) alpha = point(*aj, "domain.alpha");
    d.finish();

    json de;
    de["bounded"] = cfg.problem.domain.bounded;
    de["curves"] = json::array();
    bool any_anchor = false;
    for (const ParsedCurve& c : curves) any_anchor = any_anchor || c.anchor.has_value();
    for (const ParsedCurve& c : curves) {
      cfg.problem.domain.curves.push_back(c.spec);
      cfg.problem.U.push_back(c.U);
      cfg.problem.chi.push_back(c.chi);
      de["curves"].push_back(c.echo);
    }
    if (any_anchor) {
      for (size_t j = 0; j < curves.size(); ++j)
        cfg.problem.anchors.push_back(curves[j].anchor ? *curves[j].anchor : cplx{});
    }
    if (alpha) {
      cfg.problem.alpha = *alpha;
      de["alpha"] = point_json(*alpha);
    }
    echo["domain"] = de;
  }

  if (const json* fj = o.get("field")) {
    if (cfg.mode == RunMode::slit_map_only) fail("field", "not used in slit_map_only mode");
    Obj f(*fj, "field");
    FieldConfig fc;
    const cplx xr = point(f.at("x"), "field.x"), yr = point(f.at("y"), "field.y");
    if (!(xr.imag() > xr.real())) fail("field.x", "expected [min, max] with min < max");
    if (!(yr.imag() > yr.real())) fail("field.y", "expected [min, max] with min < max");
    fc.grid.x_min = xr.real();
    fc.grid.x_max = xr.imag();
    fc.grid.y_min = yr.real();
    fc.grid.y_max = yr.imag();
    if (const json* rj = f.get("resolution")) {
      if (!rj->is_array() || rj->size() != 2) fail("field.resolution", "expected [nx, ny]");
      const long long nx = integer((*rj)[0], "field.resolution[0]"), ny = integer((*rj)[1], "field.resolution[1]");
      if (nx < 2 || ny < 2) fail("field.resolution", "must be at least 2 x 2");
      if (nx * ny > 100000000LL) fail("field.resolution", "too many grid points");
      fc.grid.nx = static_cast<int>(nx);
      fc.grid.ny = static_cast<int>(ny);
    }
    if (const json* oj = f.get("outputs")) {
      if (!oj->is_array() || oj->empty()) fail("field.outputs", "expected a non-empty array");
      fc.psi = fc.velocity = fc.potential = false;
      for (size_t i = 0; i < oj->size(); ++i) {
        const std::string s = string((*oj)[i], index_path("field.outputs", i));
        if (s == "psi") fc.psi = true;
        else if (s == "velocity") fc.velocity = true;
        else if (s == "potential") fc.potential = true;
        else fail(index_path("field.outputs", i), "expected psi, velocity or potential");
      }
    }
    f.finish();
    json fe;
    fe["x"] = json::array({fc.grid.x_min, fc.grid.x_max});
    fe["y"] = json::array({fc.grid.y_min, fc.grid.y_max});
    fe["resolution"] = json::array({fc.grid.nx, fc.grid.ny});
    fe["outputs"] = json::array();
    if (fc.psi) fe["outputs"].push_back("psi");
    if (fc.velocity) fe["outputs"].push_back("velocity");
    if (fc.potential) fe["outputs"].push_back("potential");
    echo["field"] = fe;
    cfg.field = fc;
  }

  if (const json* oj = o.get("output")) {
    Obj out(*oj, "output");
    if (const json* dj = out.get("dir")) {
      cfg.out_dir = string(*dj, "output.dir");
      if (cfg.out_dir.empty()) fail("output.dir", "must not be empty");
    }
    out.finish();
  }
  echo["output"] = {{"dir", cfg.out_dir}};
  o.finish();
  cfg.echo = std::move(echo);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError(path + ": config file is empty");
  return parse_config(text);
}

}  // namespace stirflow
