// Command-line driver: single runs, refinement sweeps, property checks, geometry reports.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "surfns/surfns.hpp"

using namespace surfns;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0, kExitRuntime = 1, kExitConfig = 2;

struct Overrides {
  std::optional<int> level, k_lambda, k_g, threads;
  std::optional<std::string> scheme, preset;
  std::optional<double> T, dt0, dt;
  std::string out;
  bool no_walltime = false, vtu = false, quiet = false;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "preset name (paper-case1, paper-case2, paper-osc, paper-osc-pm)");
    app->add_option("--level", level, "refinement level");
    app->add_option("--scheme", scheme, "lmm_dir | lmm_cov | pm");
    app->add_option("--klambda", k_lambda, "multiplier degree");
    app->add_option("--kg", k_g, "geometry degree");
    app->add_option("--T", T, "final time");
    app->add_option("--dt0", dt0, "base time step of the Δt₀·4^-level law");
    app->add_option("--dt", dt, "fixed time step (overrides the law)");
    app->add_option("--threads", threads, "assembly threads");
    app->add_option("--out", out, "output directory");
    app->add_flag("--vtu", vtu, "write VTU snapshots");
    app->add_flag("--no-walltime", no_walltime, "write walltime 0 for byte-reproducible outputs");
    app->add_flag("--quiet,-q", quiet, "suppress per-step progress");
  }
  json apply(json j) const {
    if (preset) j["preset"] = *preset;
    if (level) j["level"] = *level;
    if (scheme) j["scheme"] = *scheme;
    if (k_lambda) j["k_lambda"] = *k_lambda;
    if (k_g) j["k_g"] = *k_g;
    if (T) j["T"] = *T;
    if (dt0) j["dt0"] = *dt0;
    if (dt) j["dt"] = *dt;
    if (threads) j["threads"] = *threads;
    if (!out.empty()) j["output_dir"] = out;
    if (vtu) j["write_vtu"] = true;
    if (no_walltime) j["record_walltime"] = false;
    return j;
  }
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
}

std::string out_dir(const RunConfig& c) { return c.output_dir.empty() ? std::string("out") : c.output_dir; }

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> v;
  auto dash = s.find('-');
  try {
    if (dash != std::string::npos && s.find(',') == std::string::npos) {
      int a = std::stoi(s.substr(0, dash)), b = std::stoi(s.substr(dash + 1));
      for (int l = a; l <= b; ++l) v.push_back(l);
    } else {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok));
    }
  } catch (const std::exception&) {
    throw ConfigError("--levels: expected 'a-b' or a comma list, got '" + s + "'");
  }
  if (v.empty()) throw ConfigError("--levels: empty level list");
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] != v[i - 1] + 1) throw ConfigError("--levels: levels must be contiguous and increasing");
  return v;
}

void print_errors(const RunResult& r) {
  auto names = ErrorReport::names(r.report.has_lambda);
  auto vals = r.report.values();
  std::printf("level %d  h=%.4f  dt=%.3e  steps=%d  N_u=%d N_p=%d N_l=%d  wall=%.1fs\n", r.config.level, r.h, r.dt,
              r.steps, r.N_u, r.N_p, r.N_l, r.walltime);
  for (size_t i = 0; i < names.size(); ++i) std::printf("  %-14s %.6e\n", names[i].c_str(), vals[i]);
}

int cmd_run(const std::string& path, const Overrides& ov) {
  json in = load_config(path);
  json merged = ov.apply(in);
  RunConfig cfg = config_from_json(merged);
  RunOptions opt;
  opt.quiet = ov.quiet;
  RunResult r = run_simulation(cfg, opt);
  r.input = merged;
  std::string dir = out_dir(cfg);
  write_run_outputs(r, dir);
  print_errors(r);
  std::printf("outputs written to %s\n", dir.c_str());
  return kExitOk;
}

int cmd_sweep(const std::string& path, const Overrides& ov, const std::string& levels) {
  json merged = ov.apply(load_config(path));
  std::vector<int> ls = parse_levels(levels);
  std::vector<RunResult> runs;
  RunConfig base = config_from_json(merged);
  std::string dir = out_dir(base);
  for (int l : ls) {
    json j = merged;
    j["level"] = l;
    RunConfig cfg = config_from_json(j);
    cfg.output_dir = (std::filesystem::path(dir) / ("level_" + std::to_string(l))).string();
    RunOptions opt;
    opt.quiet = ov.quiet;
    RunResult r = run_simulation(cfg, opt);
    r.input = j;
    write_run_outputs(r, cfg.output_dir);
    print_errors(r);
    runs.push_back(std::move(r));
  }
  std::filesystem::create_directories(dir);
  auto conv = (std::filesystem::path(dir) / "convergence.csv").string();
  auto rates = (std::filesystem::path(dir) / "eoc.csv").string();
  write_sweep_csv(runs, conv, rates);
  if (runs.size() < 2) std::printf("single level: no EOC rows\n");
  std::printf("wrote %s and %s\n", conv.c_str(), rates.c_str());
  return kExitOk;
}

int cmd_check(const std::vector<std::string>& only) {
  std::vector<std::pair<std::string, std::function<CheckResult()>>> all{
      {"skew", [] { return check_skew_symmetry(); }},
      {"blocks", [] { return check_block_equivalence(); }},
      {"transport", [] { return check_transport(); }},
      {"leray", [] { return check_leray(); }},
      {"geometry", [] { return check_geometry_orders(); }},
      {"ritz", [] { return check_ritz_stokes(); }},
      {"energy", [] { return check_energy_stability(); }}};
  bool ok = true;
  int ran = 0;
  for (auto& [key, fn] : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), key) == only.end()) continue;
    CheckResult r = fn();
    ++ran;
    ok = ok && r.pass;
    std::printf("%-4s  %-30s %12.4g  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value, r.detail.c_str());
  }
  if (ran == 0) throw ConfigError("check: no matching checks (skew, blocks, transport, leray, geometry, ritz, energy)");
  return ok ? kExitOk : kExitRuntime;
}

int cmd_geom(const std::string& bench, int kg, const std::string& levels, double t, const std::string& csv) {
  AnalyticSurface s;
  try {
    s = AnalyticSurface(surface_kind_from_name(bench));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (kg < 1 || kg > 3) throw ConfigError("--kg must be in 1..3");
  GeometryReport rep = geometry_convergence_report(s, kg, parse_levels(levels), t);
  std::printf("%-6s %-10s %-12s %-12s %-12s\n", "level", "h", "normal_err", "area_err", "measure_err");
  for (auto& r : rep.rows)
    std::printf("%-6d %-10.4f %-12.4e %-12.4e %-12.4e\n", r.level, r.h, r.normal_err, r.area_err, r.measure_err);
  for (size_t i = 0; i < rep.normal_order.size(); ++i)
    std::printf("order %d->%d: normal %.3f area %.3f measure %.3f\n", rep.rows[i].level, rep.rows[i + 1].level,
                rep.normal_order[i], rep.area_order[i], rep.measure_order[i]);
  if (!csv.empty()) {
    auto parent = std::filesystem::path(csv).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(csv);
    f << "level,h,normal_err,area_err,measure_err\n";
    for (auto& r : rep.rows)
      f << r.level << "," << fmt(r.h) << "," << fmt(r.normal_err) << "," << fmt(r.area_err) << ","
        << fmt(r.measure_err) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving-surface Navier-Stokes solver (ESFEM Taylor-Hood)"};
  app.require_subcommand(1);

  std::string run_cfg, sweep_cfg, levels = "1-3";
  Overrides run_ov, sweep_ov;
  auto* run = app.add_subcommand("run", "run one simulation");
  run->add_option("config", run_cfg, "JSON config file (optional with --preset)");
  run_ov.add_to(run);

  auto* sweep = app.add_subcommand("sweep", "refinement sweep with convergence and EOC tables");
  sweep->add_option("config", sweep_cfg, "JSON config file (optional with --preset)");
  sweep->add_option("--levels", levels, "contiguous levels, 'a-b' or comma list");
  sweep_ov.add_to(sweep);

  std::vector<std::string> only;
  auto* check = app.add_subcommand("check", "run the property suite");
  check->add_option("--only", only, "subset: skew blocks transport leray geometry ritz energy");

  std::string bench = "moving_sphere", glevels = "1-4", gcsv;
  int gkg = 2;
  double gt = 0.0;
  auto* geom = app.add_subcommand("geom-report", "geometric error convergence table");
  geom->add_option("--benchmark", bench, "moving_sphere | oscillating_sphere");
  geom->add_option("--kg", gkg, "geometry degree");
  geom->add_option("--levels", glevels, "contiguous levels");
  geom->add_option("--t", gt, "time");
  geom->add_option("--csv", gcsv, "optional CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_cfg, run_ov);
    if (*sweep) return cmd_sweep(sweep_cfg, sweep_ov, levels);
    if (*check) return cmd_check(only);
    if (*geom) return cmd_geom(bench, gkg, glevels, gt, gcsv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
