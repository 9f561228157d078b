#pragma once
// Run configuration, presets, the time loop and CSV/JSON outputs.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include "json.hpp"
#include <set>
#include <sstream>
#include <string>

#include "surfns/analysis.hpp"

namespace surfns {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InitialCondition { Ritz, RitzB, Interpolant };

struct RunConfig {
  std::string preset;
  std::string benchmark = "moving_sphere";
  std::string fields = "benchmark";
  std::string scheme = "lmm_dir";
  int k_u = 2, k_pr = 1, k_lambda = 2, k_g = 2;
  int level = 1;
  double dt0 = 0.5;
  double dt = 0.0;  // > 0 overrides the Δt₀·4^{-level} law
  double T = 2.0;
  double mu = 0.5;
  double rho = 1.0;
  double tau_factor = 0.5;  // τ = tau_factor · h^{-tau_power}
  double tau_power = 2.0;
  std::string constraint_form = "strong";
  std::string initial = "ritz";
  int quad_degree = -1;
  int threads = 1;
  std::string output_dir;
  bool write_vtu = false;
  int vtu_every = 0;
  bool lambda_errors = true;
  bool record_walltime = true;
  std::string node_motion = "exact";
  double rk4_dt = 1e-2;

  double time_step() const { return dt > 0 ? dt : dt0 * std::pow(4.0, -level); }
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> k{"preset", "benchmark", "fields", "scheme", "k_u", "k_pr", "k_lambda", "k_g",
                                       "level", "dt0", "dt", "T", "mu", "rho", "tau_factor", "tau_power",
                                       "constraint_form", "initial", "quad_degree", "threads", "output_dir",
                                       "write_vtu", "vtu_every", "lambda_errors", "record_walltime", "node_motion",
                                       "rk4_dt"};
  return k;
}

inline nlohmann::json preset_json(const std::string& name, const std::string& scheme_hint = "") {
  using nlohmann::json;
  if (name == "paper-case1")
    return json{{"benchmark", "moving_sphere"}, {"scheme", "lmm_dir"}, {"k_u", 2}, {"k_pr", 1}, {"k_lambda", 2},
                {"k_g", 2}, {"mu", 0.5}, {"dt0", 0.5}, {"T", 2.0}};
  if (name == "paper-case2")
    return json{{"benchmark", "moving_sphere"}, {"scheme", "lmm_cov"}, {"k_u", 2}, {"k_pr", 1}, {"k_lambda", 1},
                {"k_g", 3}, {"mu", 0.5}, {"dt0", 0.5}, {"T", 2.0}};
  if (name == "paper-osc" || name == "paper-osc-lmm" || name == "paper-osc-pm") {
    bool pm = name == "paper-osc-pm" || scheme_hint == "pm";
    return json{{"benchmark", "oscillating_sphere"}, {"scheme", pm ? "pm" : "lmm_cov"}, {"k_u", 2}, {"k_pr", 1},
                {"k_lambda", 1}, {"k_g", pm ? 2 : 3}, {"mu", 2e-2}, {"dt0", 0.5}, {"T", 1.0},
                {"tau_factor", 0.5}, {"tau_power", 2.0}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else {
      if (!v.is_string()) throw ConfigError("");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type (got " + v.type_name() + ")");
  }
}

inline void validate(const RunConfig& c) {
  try {
    surface_kind_from_name(c.benchmark);
    scheme_from_name(c.scheme);
    field_set_from_name(c.fields);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.k_u < 2 || c.k_u > 3) throw ConfigError("field 'k_u' must be 2 or 3");
  if (c.k_pr != c.k_u - 1) throw ConfigError("field 'k_pr' must equal k_u - 1");
  if (c.k_lambda < 1 || c.k_lambda > 3) throw ConfigError("field 'k_lambda' must be in 1..3");
  if (c.k_g < 1 || c.k_g > 3) throw ConfigError("field 'k_g' must be in 1..3");
  if (c.level < 0 || c.level > 6) throw ConfigError("field 'level' must be in 0..6");
  if (!(c.T > 0)) throw ConfigError("field 'T' must be positive");
  if (!(c.time_step() > 0)) throw ConfigError("time step must be positive");
  if (!(c.mu >= 0)) throw ConfigError("field 'mu' must be non-negative");
  if (!(c.rho > 0)) throw ConfigError("field 'rho' must be positive");
  if (c.constraint_form != "strong" && c.constraint_form != "ibp")
    throw ConfigError("field 'constraint_form' must be 'strong' or 'ibp'");
  if (c.initial != "ritz" && c.initial != "ritz_b" && c.initial != "interpolant")
    throw ConfigError("field 'initial' must be 'ritz', 'ritz_b' or 'interpolant'");
  if (c.node_motion != "exact" && c.node_motion != "rk4")
    throw ConfigError("field 'node_motion' must be 'exact' or 'rk4'");
  if (c.threads < 1) throw ConfigError("field 'threads' must be >= 1");
  if (c.quad_degree > kMaxQuadratureDegree) throw ConfigError("field 'quad_degree' too large");
  AnalyticSurface s(surface_kind_from_name(c.benchmark));
  if (c.T > s.final_time() + 1e-12)
    throw ConfigError("field 'T' exceeds the benchmark final time " + std::to_string(s.final_time()));
}

inline RunConfig config_from_json(const nlohmann::json& in) {
  if (!in.is_object()) throw ConfigError("config must be a JSON object");
  for (auto& [k, v] : in.items())
    if (!config_keys().count(k)) throw ConfigError("unknown config field '" + k + "'");
  nlohmann::json j = nlohmann::json::object();
  if (in.contains("preset")) {
    if (!in["preset"].is_string()) throw ConfigError("field 'preset' must be a string");
    std::string hint = in.contains("scheme") && in["scheme"].is_string() ? in["scheme"].get<std::string>() : "";
    j = preset_json(in["preset"].get<std::string>(), hint);
  }
  for (auto& [k, v] : in.items()) j[k] = v;
  RunConfig c;
  read_field(j, "preset", c.preset);
  read_field(j, "benchmark", c.benchmark);
  read_field(j, "fields", c.fields);
  read_field(j, "scheme", c.scheme);
  read_field(j, "k_u", c.k_u);
  read_field(j, "k_pr", c.k_pr);
  read_field(j, "k_lambda", c.k_lambda);
  read_field(j, "k_g", c.k_g);
  read_field(j, "level", c.level);
  read_field(j, "dt0", c.dt0);
  read_field(j, "dt", c.dt);
  read_field(j, "T", c.T);
  read_field(j, "mu", c.mu);
  read_field(j, "rho", c.rho);
  read_field(j, "tau_factor", c.tau_factor);
  read_field(j, "tau_power", c.tau_power);
  read_field(j, "constraint_form", c.constraint_form);
  read_field(j, "initial", c.initial);
  read_field(j, "quad_degree", c.quad_degree);
  read_field(j, "threads", c.threads);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "write_vtu", c.write_vtu);
  read_field(j, "vtu_every", c.vtu_every);
  read_field(j, "lambda_errors", c.lambda_errors);
  read_field(j, "record_walltime", c.record_walltime);
  read_field(j, "node_motion", c.node_motion);
  read_field(j, "rk4_dt", c.rk4_dt);
  validate(c);
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{{"preset", c.preset}, {"benchmark", c.benchmark}, {"fields", c.fields}, {"scheme", c.scheme},
                        {"k_u", c.k_u}, {"k_pr", c.k_pr}, {"k_lambda", c.k_lambda}, {"k_g", c.k_g},
                        {"level", c.level}, {"dt0", c.dt0}, {"dt", c.dt}, {"T", c.T}, {"mu", c.mu}, {"rho", c.rho},
                        {"tau_factor", c.tau_factor}, {"tau_power", c.tau_power},
                        {"constraint_form", c.constraint_form}, {"initial", c.initial},
                        {"quad_degree", c.quad_degree}, {"threads", c.threads}, {"output_dir", c.output_dir},
                        {"write_vtu", c.write_vtu}, {"vtu_every", c.vtu_every}, {"lambda_errors", c.lambda_errors},
                        {"record_walltime", c.record_walltime}, {"node_motion", c.node_motion},
                        {"rk4_dt", c.rk4_dt}};
}

inline RunConfig preset_config(const std::string& name, const std::string& scheme_hint = "") {
  nlohmann::json j{{"preset", name}};
  if (!scheme_hint.empty()) j["scheme"] = scheme_hint;
  return config_from_json(j);
}

struct StepRecord {
  int n = 0;
  double t = 0;
  double residual = 0, constraint_residual = 0, node_residual = 0;
  StepErrors err;
};

struct RunResult {
  RunConfig config;
  nlohmann::json input;  // verbatim input echo
  double h = 0, dt = 0, tau = 0;
  int steps = 0, N_u = 0, N_p = 0, N_l = 0;
  ErrorReport report;
  std::vector<StepRecord> records;
  double max_residual = 0, max_constraint_residual = 0, max_node_residual = 0;
  double walltime = 0;
};

// Hook invoked after each step (including n=0) with the snapshot context and state.
using StepObserver = std::function<void(int, const FormContext&, const StepState&)>;

struct RunOptions {
  std::optional<VecX> initial_velocity;  // overrides the configured initial condition
  StepObserver observer;
  bool quiet = true;
};

class Simulation {
 public:
  RunConfig cfg;
  AnalyticSurface surface;
  ExactSolution ex;
  Scheme scheme;
  SurfaceMesh mesh0;
  TaylorHoodSpace V;
  StepParams prm;
  int N = 0;

  explicit Simulation(const RunConfig& c) : cfg(c) {
    validate(cfg);
    surface = AnalyticSurface(surface_kind_from_name(cfg.benchmark));
    scheme = scheme_from_name(cfg.scheme);
    ex.surface = surface;
    ex.fields = field_set_from_name(cfg.fields);
    ex.mu = cfg.mu;
    ex.rho = cfg.rho;
    ex.tangential = scheme == Scheme::Pm;
    mesh0 = build_initial_mesh(surface, cfg.level, cfg.k_g, cfg.T);
    V = TaylorHoodSpace(mesh0, cfg.k_u, cfg.k_pr, cfg.k_lambda, true);
    if (scheme == Scheme::LmmDir && cfg.k_lambda != cfg.k_u)
      std::cerr << "warning: lmm_dir is analysed for k_lambda = k_u only\n";
    if (scheme == Scheme::LmmCov && cfg.k_lambda == cfg.k_u - 1 && cfg.k_g < cfg.k_u + 1)
      std::cerr << "warning: lmm_cov with k_lambda = k_u - 1 expects k_g = k_u + 1\n";
    N = std::max(1, static_cast<int>(std::ceil(cfg.T / cfg.time_step() - 1e-9)));
    prm.scheme = scheme;
    prm.constraint = cfg.constraint_form == "ibp" ? ConstraintForm::Ibp : ConstraintForm::Strong;
    prm.dt = cfg.T / N;
    prm.mu = cfg.mu;
    prm.rho = cfg.rho;
    prm.tau = cfg.tau_factor * std::pow(mesh0.h_max(), -cfg.tau_power);
  }

  SurfaceMesh mesh_at(const SurfaceMesh& prev, double t) const {
    if (cfg.node_motion == "rk4") return prev.evolve_rk4(t, cfg.rk4_dt);
    return mesh0.evolve(t);
  }

  StepState initial_state(const FormContext& c0, const SnapshotData& d0, const RunOptions& opt) const {
    StepState s;
    s.t = 0.0;
    if (opt.initial_velocity) {
      s.u = *opt.initial_velocity;
    } else if (cfg.initial == "interpolant") {
      std::cerr << "warning: interpolated initial data is not discretely divergence free; the stability theory "
                   "then needs an inverse CFL condition\n";
      s.u = interpolate_vector(V, mesh0, [&](const Vec3& x) {
              return ex.velocity(surface.closest_point(x, 0.0), 0.0);
            }).coeffs;
    } else {
      RitzVariant var = RitzVariant::Modified;
      if (cfg.initial == "ritz_b") {
        if (!opt.quiet) std::cerr << "note: standard Ritz-Stokes uses p(0) and lambda(0) = 0\n";
        var = RitzVariant::Standard;
      }
      ProjectionResult r = ritz_stokes(c0, ex, d0, var);
      s.u = r.u;
      s.residual = r.residual;
    }
    s.p = VecX::Zero(V.n_p());
    s.l = scheme == Scheme::Pm ? VecX() : VecX::Zero(V.n_l());
    return s;
  }

  ErrorOptions error_options() const {
    ErrorOptions o;
    o.penalty_normal = scheme == Scheme::Pm;
    o.lambda_errors = cfg.lambda_errors && scheme != Scheme::Pm;
    return o;
  }

  RunResult run(const RunOptions& opt = {}) const {
    auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    res.config = cfg;
    res.input = config_to_json(cfg);
    res.h = mesh0.h_max();
    res.dt = prm.dt;
    res.tau = scheme == Scheme::Pm ? prm.tau : 0.0;
    res.steps = N;
    res.N_u = V.n_u();
    res.N_p = V.n_p();
    res.N_l = scheme == Scheme::Pm ? 0 : V.n_l();

    SurfaceMesh mesh = mesh0;
    FormContext c0(mesh, V, cfg.quad_degree, cfg.threads);
    SnapshotData d0 = build_data(ex, scheme, mesh, V);
    StepState st = initial_state(c0, d0, opt);
    SpMat M_prev = scheme == Scheme::Pm ? assemble_projected_mass(c0) : assemble_mass(c0);
    ErrorOptions eo = error_options();
    StepErrors e0 = step_errors(c0, ex, st, eo);
    res.report.add(e0, prm.dt, true);
    res.records.push_back({0, 0.0, st.residual, 0.0, mesh.max_level_set_residual(), e0});
    if (opt.observer) opt.observer(0, c0, st);
    maybe_vtu(mesh, st, 0);

    for (int n = 1; n <= N; ++n) {
      double t = (n == N) ? cfg.T : n * prm.dt;
      mesh = mesh_at(mesh, t);
      FormContext c(mesh, V, cfg.quad_degree, cfg.threads);
      SnapshotData d = build_data(ex, scheme, mesh, V);
      StepResult r;
      try {
        r = scheme == Scheme::Pm ? pm_step(st, M_prev, c, d, prm) : lmm_step(st, M_prev, c, d, prm);
        check_finite(r.state, n);
      } catch (const SolverError& e) {
        throw SolverError("step " + std::to_string(n) + " (t=" + std::to_string(t) + "): " + e.what());
      }
      st = std::move(r.state);
      M_prev = std::move(r.M);
      StepErrors e = step_errors(c, ex, st, eo);
      res.report.add(e, prm.dt, false);
      StepRecord rec{n, t, st.residual, st.constraint_residual, mesh.max_level_set_residual(), e};
      res.records.push_back(rec);
      res.max_residual = std::max(res.max_residual, st.residual);
      res.max_constraint_residual = std::max(res.max_constraint_residual, st.constraint_residual);
      if (opt.observer) opt.observer(n, c, st);
      if (!opt.quiet)
        std::fprintf(stderr, "step %d/%d t=%.5f |u-uh|=%.3e res=%.1e\n", n, N, t, e.l2, st.residual);
      maybe_vtu(mesh, st, n);
    }
    for (auto& r : res.records) res.max_node_residual = std::max(res.max_node_residual, r.node_residual);
    res.walltime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

 private:
  void maybe_vtu(const SurfaceMesh& m, const StepState& st, int n) const {
    if (!cfg.write_vtu || cfg.output_dir.empty()) return;
    if (cfg.vtu_every > 0 ? (n % cfg.vtu_every != 0 && n != N) : (n != 0 && n != N)) return;
    std::filesystem::create_directories(cfg.output_dir);
    auto u = sample_at_geo_nodes(V, {Field::Velocity, st.u}, m);
    std::vector<std::pair<std::string, std::vector<double>>> sc;
    auto tosc = [](const std::vector<Vec3>& v) {
      std::vector<double> s(v.size());
      for (size_t i = 0; i < v.size(); ++i) s[i] = v[i][0];
      return s;
    };
    sc.emplace_back("pressure", tosc(sample_at_geo_nodes(V, {Field::Pressure, st.p}, m)));
    if (st.l.size()) sc.emplace_back("lambda", tosc(sample_at_geo_nodes(V, {Field::Multiplier, st.l}, m)));
    char name[64];
    std::snprintf(name, sizeof name, "step_%05d.vtu", n);
    m.write_vtu((std::filesystem::path(cfg.output_dir) / name).string(), {{"velocity", u}}, sc);
  }
};

inline RunResult run_simulation(const RunConfig& cfg, const RunOptions& opt = {}) { return Simulation(cfg).run(opt); }

inline std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.10e", v);
  return b;
}

inline nlohmann::json summary_json(const RunResult& r) {
  nlohmann::json e;
  auto names = ErrorReport::names(r.report.has_lambda);
  auto vals = r.report.values();
  for (size_t i = 0; i < names.size(); ++i) e[names[i]] = vals[i];
  return nlohmann::json{{"input", r.input},
                        {"config", config_to_json(r.config)},
                        {"h", r.h},
                        {"dt", r.dt},
                        {"steps", r.steps},
                        {"tau", r.tau},
                        {"N_u", r.N_u},
                        {"N_p", r.N_p},
                        {"N_l", r.N_l},
                        {"errors", e},
                        {"max_solver_residual", r.max_residual},
                        {"max_constraint_residual", r.max_constraint_residual},
                        {"max_node_level_set", r.max_node_residual},
                        {"walltime_s", r.config.record_walltime ? r.walltime : 0.0}};
}

inline void write_steps_csv(const RunResult& r, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "n,t,solver_residual,constraint_residual,node_level_set,e_ah,e_h1,e_l2,e_Pl2,e_n,e_div,e_p";
  if (r.report.has_lambda) f << ",e_l_l2,e_l_hm1";
  f << "\n";
  for (auto& s : r.records) {
    f << s.n << "," << fmt(s.t) << "," << fmt(s.residual) << "," << fmt(s.constraint_residual) << ","
      << fmt(s.node_residual) << "," << fmt(s.err.ah) << "," << fmt(s.err.h1) << "," << fmt(s.err.l2) << ","
      << fmt(s.err.Pl2) << "," << fmt(s.err.n) << "," << fmt(s.err.div) << "," << fmt(s.err.p);
    if (r.report.has_lambda) f << "," << fmt(s.err.lam_l2) << "," << fmt(s.err.lam_hm1);
    f << "\n";
  }
}

inline void write_run_outputs(const RunResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / "summary.json") << summary_json(r).dump(2) << "\n";
  write_steps_csv(r, (std::filesystem::path(dir) / "steps.csv").string());
}

// convergence table (one row per level) and EOC table between consecutive levels
inline void write_sweep_csv(const std::vector<RunResult>& runs, const std::string& conv_path,
                            const std::string& eoc_path) {
  if (runs.empty()) throw std::invalid_argument("write_sweep_csv: no runs");
  bool lam = runs.front().report.has_lambda;
  auto names = ErrorReport::names(lam);
  std::ofstream f(conv_path);
  if (!f) throw std::runtime_error("cannot write " + conv_path);
  f << "level,h,dt,N_u,N_p,N_l";
  for (auto& n : names) f << "," << n;
  f << ",walltime_s\n";
  for (auto& r : runs) {
    f << r.config.level << "," << fmt(r.h) << "," << fmt(r.dt) << "," << r.N_u << "," << r.N_p << "," << r.N_l;
    for (double v : r.report.values()) f << "," << fmt(v);
    f << "," << fmt(r.config.record_walltime ? r.walltime : 0.0) << "\n";
  }
  std::ofstream g(eoc_path);
  if (!g) throw std::runtime_error("cannot write " + eoc_path);
  g << "level_from,level_to";
  for (auto& n : names) g << "," << n;
  g << "\n";
  for (size_t i = 0; i + 1 < runs.size(); ++i) {
    g << runs[i].config.level << "," << runs[i + 1].config.level;
    auto a = runs[i].report.values(), b = runs[i + 1].report.values();
    for (size_t k = 0; k < a.size(); ++k) g << "," << fmt(eoc({a[k], b[k]}, {runs[i].h, runs[i + 1].h})[0]);
    g << "\n";
  }
}

}  // namespace surfns
