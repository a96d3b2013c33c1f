#include "stirflow/run.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace stirflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json point_json(cplx z) { return json::array({z.real(), z.imag()}); }

// Removes written files (and a directory we created) unless released.
class OutputGuard {
 public:
  explicit OutputGuard(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    if (!fs::exists(dir_, ec)) {
      fs::create_directories(dir_, ec);
      if (ec) throw ConfigError("output.dir: cannot create '" + dir_.string() + "': " + ec.message());
      created_ = true;
    } else if (!fs::is_directory(dir_, ec)) {
      throw ConfigError("output.dir: '" + dir_.string() + "' is not a directory");
    }
  }
  ~OutputGuard() {
    if (released_) return;
    std::error_code ec;
    for (const std::string& f : files_) fs::remove(f, ec);
    if (created_) fs::remove(dir_, ec);
  }
  std::string path(const std::string& name) {
    files_.push_back((dir_ / name).string());
    return files_.back();
  }
  const std::vector<std::string>& files() const { return files_; }
  void release() { released_ = true; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  bool created_ = false;
  bool released_ = false;
};

json solve_entry(const std::string& stage, const RHSolution& rh) {
  return {{"stage", stage},
          {"gmres_iterations", rh.gmres_iterations},
          {"gmres_residual", rh.residual},
          {"true_residual", rh.true_residual},
          {"h_deviation", rh.h_deviation}};
}

json residual_json(const BCResidual& r) {
  return {{"max", r.max()}, {"per_curve", r.per_curve}, {"h_deviation", r.h_deviation}};
}

json nodes_json(const DiscretizedBoundary& b) {
  return {{"n", b.n()}, {"curves", b.curve_count()}, {"total", b.size()}};
}

json preimage_json(const SlitMapResult& m) {
  json p;
  p["iterations"] = m.iterations;
  p["final_error"] = m.final_error;
  p["stalled"] = m.stalled;
  p["error_history"] = m.error_history;
  p["r"] = m.state.r;
  json ellipses = json::array();
  for (size_t j = 0; j < m.state.z.size(); ++j)
    ellipses.push_back({{"center", point_json(m.state.z[j])}, {"a", m.state.a[j]}, {"b", m.state.b[j]}});
  p["ellipses"] = ellipses;
  json achieved = json::array();
  for (const SlitGeometry& g : m.achieved)
    achieved.push_back({{"center", point_json(g.center)}, {"length", g.length}, {"spread", g.spread}});
  p["achieved"] = achieved;
  if (m.canonical_type == CanonicalType::halfplane_slits) p["h0"] = m.h0;
  return p;
}

void write_field(OutputGuard& out, const FieldConfig& fc, const FieldGrid& g, const std::string& space,
                 bool with_positions) {
  if (fc.psi) write_grid(out.path("psi.txt"), "psi", g.spec, g.psi, space);
  if (fc.velocity) {
    write_grid(out.path("u.txt"), "u", g.spec, g.u, space);
    write_grid(out.path("v.txt"), "v", g.spec, g.v, space);
  }
  if (fc.potential) write_grid(out.path("phi.txt"), "phi", g.spec, g.phi, space);
  if (with_positions) {
    write_grid(out.path("x.txt"), "x", g.spec, g.x, space);
    write_grid(out.path("y.txt"), "y", g.spec, g.y, space);
  }
}

}  // namespace

void write_grid(const std::string& path, const std::string& name, const GridSpec& spec, const RealVec& values,
                const std::string& space) {
  if (values.size() != static_cast<size_t>(spec.nx) * spec.ny) throw Error("write_grid: size mismatch for " + name);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error("cannot write '" + path + "'");
  std::fprintf(f, "# %s x_min=%.17g x_max=%.17g y_min=%.17g y_max=%.17g nx=%d ny=%d space=%s\n", name.c_str(),
               spec.x_min, spec.x_max, spec.y_min, spec.y_max, spec.nx, spec.ny, space.c_str());
  char buf[40];
  for (int k = 0; k < spec.ny; ++k) {
    std::string line;
    for (int i = 0; i < spec.nx; ++i) {
      const double v = values[static_cast<size_t>(k) * spec.nx + i];
      if (std::isnan(v)) {
        line += "nan";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        line += buf;
      }
      line += i + 1 < spec.nx ? ',' : '\n';
    }
    std::fputs(line.c_str(), f);
  }
  const bool bad = std::ferror(f) != 0;
  if (std::fclose(f) != 0 || bad) throw Error("error writing '" + path + "'");
}

void check_config(const RunConfig& cfg) {
  try {
    if (cfg.mode == RunMode::stirrers) {
      const DiscretizedBoundary b = discretize(cfg.problem.domain, std::min(cfg.n, 256), cfg.grading_p);
      resolve_problem(cfg.problem, b);
    } else {
      validate_slits(cfg.slits, cfg.canonical);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(cfg.mode == RunMode::stirrers ? "domain: " : "slits: ") + e.what());
  }
}

RunOutcome run(const RunConfig& cfg) {
  const auto t_start = Clock::now();
  check_config(cfg);
  OutputGuard out(cfg.out_dir);
  json report;
  report["config"] = cfg.echo;
  report["threads"] = omp_get_max_threads();
  json solves = json::array();
  json timings;

  if (cfg.mode == RunMode::stirrers) {
    auto t0 = Clock::now();
    const DiscretizedBoundary b = discretize(cfg.problem.domain, cfg.n, cfg.grading_p);
    timings["discretize"] = seconds_since(t0);
    t0 = Clock::now();
    const FlowSolution sol = solve_flow(cfg.problem, b, cfg.solver);
    timings["solve"] = seconds_since(t0);
    solves.push_back(solve_entry("flow", sol.rh()));
    report["nodes"] = nodes_json(b);
    t0 = Clock::now();
    report["bc_residual"] = residual_json(sol.bc_residual());
    timings["residual"] = seconds_since(t0);
    report["h"] = sol.rh().h.values;
    if (cfg.field) {
      t0 = Clock::now();
      const FieldGrid g = streamfunction_grid(sol, cfg.field->grid);
      write_field(out, *cfg.field, g, "physical", false);
      report["field"] = {{"fluid_cells", g.fluid_count()}};
      timings["field"] = seconds_since(t0);
    }
  } else {
    auto t0 = Clock::now();
    SlitFlow sf;
    sf.map = find_preimage(cfg.slits, cfg.canonical, cfg.slit, cfg.solver);
    timings["preimage"] = seconds_since(t0);
    for (size_t k = 0; k < sf.map.gmres_history.size(); ++k)
      solves.push_back({{"stage", "preimage"}, {"iteration", k + 1}, {"gmres_iterations", sf.map.gmres_history[k]}});
    solves.back() = solve_entry("preimage", sf.map.rh);
    solves.back()["iteration"] = sf.map.iterations;
    report["preimage"] = preimage_json(sf.map);
    report["nodes"] = nodes_json(sf.map.preimage());

    if (cfg.mode == RunMode::slit_stirrers) {
      t0 = Clock::now();
      const DiscretizedBoundary& b = sf.map.preimage();
      StirrerProblem p;
      p.domain.bounded = b.bounded();
      for (int j = 0; j < b.curve_count(); ++j) p.domain.curves.push_back(b.spec(j));
      if (cfg.canonical == CanonicalType::halfplane_slits) {
        p.U.push_back(0.0);
        p.chi.push_back(0.0);
      }
      for (const SlitSpec& s : cfg.slits) {
        p.U.push_back(s.U);
        p.chi.push_back(s.chi);
      }
      sf.flow.emplace(solve_flow(p, b, sf.map.Phi_boundary, cfg.solver));
      timings["solve"] = seconds_since(t0);
      solves.push_back(solve_entry("flow", sf.flow->rh()));
      t0 = Clock::now();
      report["bc_residual"] = residual_json(sf.bc_residual());
      timings["residual"] = seconds_since(t0);
      report["h"] = sf.flow->rh().h.values;
      if (cfg.field) {
        t0 = Clock::now();
        const FieldGrid g = slit_flow_grid(sf, cfg.field->grid);
        const bool half = cfg.canonical == CanonicalType::halfplane_slits;
        write_field(out, *cfg.field, g, half ? "mobius" : "preimage", true);
        report["field"] = {{"fluid_cells", g.fluid_count()}};
        timings["field"] = seconds_since(t0);
      }
    }
  }
  report["solves"] = solves;
  timings["total"] = seconds_since(t_start);
  report["timings"] = timings;

  const std::string report_path = out.path("report.json");
  json files = json::array();
  for (const std::string& f : out.files()) files.push_back(fs::path(f).filename().string());
  report["files"] = files;
  {
    std::ofstream os(report_path, std::ios::binary);
    os << report.dump(2) << '\n';
    if (!os) throw Error("error writing '" + report_path + "'");
  }
  out.release();
  return {report, out.files()};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const PreimageError*>(&e)) return 4;
  if (dynamic_cast<const SolverError*>(&e)) return 3;
  if (dynamic_cast<const GeometryError*>(&e)) return 2;
  return 1;
}

}  // namespace stirflow
