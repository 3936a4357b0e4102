#include "cidyn/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace cidyn {

namespace {

using nlohmann::ordered_json;

// observable name -> CSV column
const std::vector<std::pair<std::string, std::string>>& column_map() {
  static const std::vector<std::pair<std::string, std::string>> map = {
      {"Sx", "Sx"},         {"Sy", "Sy"},         {"Sz", "Sz"},         {"Nx", "Nx"},
      {"Ny", "Ny"},         {"x", "x_nm"},        {"y", "y_nm"},        {"xSz", "xSz_nm"},
      {"ySx", "ySx_nm"},    {"pop_l_gg", "pop_l_gg"}, {"pop_l_00", "pop_l_00"}, {"pop_l_11", "pop_l_11"},
      {"pop_r_gg", "pop_r_gg"}, {"pop_r_00", "pop_r_00"}, {"pop_r_11", "pop_r_11"}, {"parity", "parity_re"},
      {"exsum", "exsum"},
  };
  return map;
}

std::string num(double v) {
  // shortest text that parses back to the same double
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double spin_sz(const SpinConfig& s) {
  if (s == SpinConfig{Level::one, Level::zero}) return 1.0;
  if (s == SpinConfig{Level::zero, Level::one}) return -1.0;
  return 0.0;
}

std::filesystem::path output_path(const RunConfig& c, const std::string& suffix) {
  return std::filesystem::path(c.out_dir) / (c.stem() + suffix);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void log(const RunOptions& o, const std::string& line) {
  if (o.log) *o.log << line << '\n';
}

std::string csv(const std::vector<std::string>& header, std::size_t rows,
                const std::function<double(std::size_t row, std::size_t col)>& cell) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + num(cell(r, c));
    out += '\n';
  }
  return out;
}

// Population sums and trace, checked on every row before anything is written.
void self_check(const SimulationResult& r, Solver solver) {
  const auto& s = r.series;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    for (const char* side : {"l", "r"}) {
      const std::string p = std::string("pop_") + side + "_";
      const double sum = s.track(p + "gg")[k] + s.track(p + "00")[k] + s.track(p + "11")[k];
      if (std::abs(sum - 1.0) >= 1e-6) {
        std::ostringstream os;
        os << "ion " << side << " populations sum to " << sum << " at t = " << s.times[k];
        throw SolverAbort("population_check", os.str(), s.times[k]);
      }
    }
    if (solver == Solver::lindblad && std::abs(r.diagnostics.trace[k] - 1.0) >= 1e-6) {
      std::ostringstream os;
      os << "trace " << r.diagnostics.trace[k] << " at t = " << s.times[k];
      throw SolverAbort("trace_check", os.str(), s.times[k]);
    }
  }
}

ordered_json diagnostics_json(const Diagnostics& d) {
  ordered_json j;
  j["solver"] = d.solver;
  j["step_us"] = d.step;
  j["steps"] = d.steps;
  j["rhs_evaluations"] = d.rhs_evaluations;
  j["interaction_frame"] = d.interaction_frame;
  j["max_norm_drift"] = d.max_norm_drift();
  double lx = 0.0;
  double ly = 0.0;
  for (double v : d.leakage_x) lx = std::max(lx, v);
  for (double v : d.leakage_y) ly = std::max(ly, v);
  j["max_leakage_x"] = lx;
  j["max_leakage_y"] = ly;
  if (!d.min_population.empty()) j["min_population"] = *std::min_element(d.min_population.begin(), d.min_population.end());
  if (d.solver == "trajectories") j["jumps"] = d.jumps;
  j["warnings"] = d.warnings;
  return j;
}

ordered_json sidecar_base(const RunConfig& c) {
  ordered_json j;
  j["artifact"] = "cidyn";
  j["version"] = kArtifactVersion;
  j["scenario"] = c.scenario;
  j["solver"] = c.scenario == "surfaces" ? "none" : std::string(solver_name(c.solver));
  j["seed"] = c.seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
  j["config"] = cfg;
  const SystemParams& p = c.params;
  j["params"] = {{"omega_x", p.omega_x}, {"omega_y", p.omega_y}, {"G_x", p.G_x},       {"G_y", p.G_y},
                 {"eta_x_nm", p.eta_x},  {"eta_y_nm", p.eta_y},  {"gamma_S", p.gamma_S}, {"gamma_P", p.gamma_P},
                 {"basis", p.basis.tag()}, {"dim", p.basis.dim()}};
  return j;
}

std::string error_record(const std::string& status, const std::string& diagnostic, const std::string& message,
                         std::optional<double> t) {
  ordered_json j;
  j["status"] = status;
  j["diagnostic"] = diagnostic;
  j["message"] = message;
  if (t) j["t_us"] = *t;
  return j.dump();
}

std::vector<std::string> write_dynamics(const RunConfig& c, const SimulationResult& r, ordered_json& meta) {
  std::vector<std::string> files;
  const auto& s = r.series;
  std::vector<const std::vector<double>*> cols;
  std::vector<const std::vector<double>*> se_cols;
  std::vector<std::string> header = {"t_us"};
  if (c.solver == Solver::meanfield) {
    for (std::size_t i = 1; i < meanfield_csv_columns().size(); ++i) {
      const auto& name = meanfield_csv_columns()[i];
      header.push_back(name);
      cols.push_back(&s.track(name == "x_nm" ? "x" : name == "y_nm" ? "y" : name));
    }
  } else {
    for (const auto& [obs, col] : column_map()) {
      header.push_back(col);
      cols.push_back(&s.track(obs));
      const auto se = s.stderr_tracks.find(obs);
      se_cols.push_back(se == s.stderr_tracks.end() ? nullptr : &se->second);
    }
    header.push_back("trace");
    cols.push_back(&r.diagnostics.trace);
    se_cols.push_back(nullptr);
  }
  const auto main = output_path(c, ".csv");
  write_text(main, csv(header, s.times.size(), [&](std::size_t row, std::size_t col) {
               return col == 0 ? s.times[row] : (*cols[col - 1])[row];
             }));
  files.push_back(main.string());
  if (c.solver == Solver::trajectories) {
    const auto se_path = output_path(c, ".stderr.csv");
    write_text(se_path, csv(header, s.times.size(), [&](std::size_t row, std::size_t col) {
                 if (col == 0) return s.times[row];
                 return se_cols[col - 1] ? (*se_cols[col - 1])[row] : 0.0;
               }));
    files.push_back(se_path.string());
  }
  meta["n_outputs"] = s.times.size();
  meta["diagnostics"] = diagnostics_json(r.diagnostics);
  if (r.steady_state) {
    ordered_json fps = ordered_json::array();
    for (const auto& fp : r.steady_state->fixed_points) {
      const auto v = fp.state.pack();
      fps.push_back({{"state", std::vector<double>(v.begin(), v.end())}, {"residual", fp.residual}, {"hits", fp.hits}});
    }
    int converged = 0;
    for (const auto& g : r.steady_state->guesses) converged += g.converged ? 1 : 0;
    meta["steady_state"] = {{"guesses", r.steady_state->guesses.size()},
                            {"converged_guesses", converged},
                            {"fixed_points", fps}};
  }
  return files;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"t_us"};
    for (const auto& [obs, col] : column_map()) c.push_back(col);
    c.push_back("trace");
    return c;
  }();
  return cols;
}

const std::vector<std::string>& meanfield_csv_columns() {
  static const std::vector<std::string> cols = {"t_us", "A_re", "A_im", "B_re", "B_im", "Sx",
                                                "Sy",   "Sz",   "x_nm", "y_nm"};
  return cols;
}

Problem build_problem(const RunConfig& config) {
  const auto violations = config_violations(config);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw InvalidArgument(msg);
  }
  Problem p{config.params,
            build_hamiltonian(config.params),
            build_jump_operators(config.params),
            initial_state(config.alpha_x, config.alpha_y, config.spins, config.params.basis),
            standard_observables(config.params),
            {}};
  const double h = recommended_step(p.hamiltonian, p.jumps, config.step);
  p.grid = TimeGrid::with_output_interval(config.t0, config.t1, config.output_interval, h);
  return p;
}

SimulationResult simulate(const RunConfig& config, const RunOptions& options) {
  if (config.scenario == "surfaces") throw InvalidArgument("simulate: the surfaces scenario has no dynamics");
  SimulationResult out;
  if (config.solver == Solver::meanfield) {
    const auto violations = config_violations(config);
    if (!violations.empty()) throw InvalidArgument("invalid config: " + violations.front());
    const SystemParams& p = config.params;
    out.grid = TimeGrid::with_output_interval(config.t0, config.t1, config.output_interval, 1e-3);
    const auto mf = mf_evolve(mf_initial_state(config.alpha_x, config.alpha_y, spin_sz(config.spins)), p, out.grid);
    auto& s = out.series;
    s.times = mf.times;
    for (const auto& st : mf.states) {
      s.tracks["A_re"].push_back(st.A.real());
      s.tracks["A_im"].push_back(st.A.imag());
      s.tracks["B_re"].push_back(st.B.real());
      s.tracks["B_im"].push_back(st.B.imag());
      s.tracks["Sx"].push_back(st.sx);
      s.tracks["Sy"].push_back(st.sy);
      s.tracks["Sz"].push_back(st.sz);
      s.tracks["x"].push_back(2.0 * p.eta_x * st.A.real());
      s.tracks["y"].push_back(2.0 * p.eta_y * st.B.real());
    }
    out.diagnostics.solver = "meanfield";
    out.diagnostics.step = out.grid.step();
    out.diagnostics.steps = out.grid.n_steps;
    if (mf.max_spin_length_squared > 1.0 + 1e-6) {
      out.diagnostics.warnings.push_back("mean-field spin length exceeds 1: " + std::to_string(mf.max_spin_length_squared));
    }
    if (p.gamma_S > 0.0) {
      const auto guesses = default_guess_grid(std::abs(config.alpha_x));
      out.steady_state = mf_steady_state(p, guesses);
    }
    s.metadata["solver"] = "meanfield";
    return out;
  }

  const Problem p = build_problem(config);
  log(options, config.scenario + ": " + std::string(solver_name(config.solver)) + ", dim " +
                   std::to_string(p.params.basis.dim()) + ", " + std::to_string(p.grid.n_steps) + " steps of " +
                   num(p.grid.step()) + " us");
  EvolveOptions eo;
  eo.exec = options.exec;
  EvolutionResult result;
  switch (config.solver) {
    case Solver::schrodinger:
      result = schrodinger_evolve(p.hamiltonian, p.psi0, p.grid, p.observables, eo);
      break;
    case Solver::lindblad:
      result = lindblad_evolve(p.hamiltonian, p.jumps, to_density(p.psi0), p.grid, p.observables, eo);
      break;
    case Solver::trajectories:
      result = mc_trajectories(p.hamiltonian, p.jumps, p.psi0, p.grid, p.observables,
                               TrajectoryOptions{config.n_traj, config.seed, 1e-6}, eo);
      break;
    case Solver::meanfield:
      break;
  }
  out.grid = p.grid;
  out.series = measure_all(result, p.observables);
  out.diagnostics = std::move(result.diagnostics);
  for (const auto& w : out.diagnostics.warnings) log(options, "warning: " + w);
  return out;
}

SurfaceGrid compute_surfaces(const RunConfig& config) {
  const auto violations = config_violations(config);
  if (!violations.empty()) throw InvalidArgument("invalid config: " + violations.front());
  SurfaceGrid g;
  g.n = config.surface_points;
  const double e = config.surface_extent_nm;
  const int half = (g.n - 1) / 2;
  g.points.reserve(static_cast<std::size_t>(g.n) * g.n);
  for (int i = 0; i < g.n; ++i) {
    // integer offsets from the centre keep the origin exactly on the grid
    const double x = e * (i - half) / half;
    for (int j = 0; j < g.n; ++j) g.points.push_back({x, e * (j - half) / half});
  }
  g.values = adiabatic_surfaces(config.params, g.points);
  return g;
}

RunOutcome run_scenario(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  if (const auto v = config_violations(config); !v.empty()) {
    outcome.exit_code = kExitConfigError;
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    outcome.error = error_record("config_error", "invalid_config", msg, std::nullopt);
    return outcome;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(config.out_dir);
    ordered_json meta = sidecar_base(config);
    if (config.scenario == "surfaces") {
      const SurfaceGrid g = compute_surfaces(config);
      const auto path = output_path(config, ".csv");
      write_text(path, csv({"x_nm", "y_nm", "V_minus", "V_plus"}, g.points.size(), [&](std::size_t r, std::size_t c) {
                   switch (c) {
                     case 0:
                       return g.points[r].x_nm;
                     case 1:
                       return g.points[r].y_nm;
                     case 2:
                       return g.values[r].v_minus;
                     default:
                       return g.values[r].v_plus;
                   }
                 }));
      outcome.files.push_back(path.string());
      meta["surface"] = {{"grid_points", g.n},
                         {"extent_nm", config.surface_extent_nm},
                         {"minimum_x_nm", surface_minimum_x(config.params)}};
    } else {
      const SimulationResult r = simulate(config, options);
      if (config.solver != Solver::meanfield) self_check(r, config.solver);
      auto files = write_dynamics(config, r, meta);
      outcome.files.insert(outcome.files.end(), files.begin(), files.end());
    }
    meta["files"] = outcome.files;
    meta["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto sidecar = output_path(config, ".json");
    write_text(sidecar, meta.dump(2) + "\n");
    outcome.files.push_back(sidecar.string());
    // a stale error record from an earlier attempt would be misleading
    std::filesystem::remove(output_path(config, ".error.json"));
  } catch (const SolverAbort& e) {
    outcome.exit_code = kExitSolverAbort;
    outcome.error = error_record("solver_abort", e.diagnostic(), e.what(), e.time());
  } catch (const InvalidArgument& e) {
    outcome.exit_code = kExitConfigError;
    outcome.error = error_record("config_error", "invalid_argument", e.what(), std::nullopt);
  } catch (const std::exception& e) {
    outcome.exit_code = kExitSolverAbort;
    outcome.error = error_record("solver_abort", "exception", e.what(), std::nullopt);
  }
  if (outcome.exit_code != kExitOk) {
    try {
      std::filesystem::create_directories(config.out_dir);
      // outputs of an earlier successful run would otherwise pass for this one's
      for (const char* ext : {".csv", ".stderr.csv", ".json"}) std::filesystem::remove(output_path(config, ext));
      const auto path = output_path(config, ".error.json");
      write_text(path, outcome.error + "\n");
      outcome.files.push_back(path.string());
    } catch (const std::exception&) {
      // the record still goes back to the caller
    }
  }
  return outcome;
}

std::vector<BasisSpec> default_ladder() { return {{12, 8}, {16, 10}, {20, 12}}; }

ConvergenceReport run_convergence(const RunConfig& config, std::span<const BasisSpec> ladder, double tolerance,
                                  const RunOptions& options) {
  // One time step for every rung (the finest rung's), so the sweep measures
  // truncation only and not the step-size change that follows ||V||.
  RunConfig pinned = config;
  if (!ladder.empty() && config.solver != Solver::meanfield) {
    RunConfig finest = config;
    finest.params.basis = ladder.back();
    try {
      pinned.step.max_step = build_problem(finest).grid.step();
    } catch (const std::exception&) {
      // the failing rung reports itself in the sweep
    }
  }
  return convergence_sweep(
      [&](const BasisSpec& basis) {
        RunConfig c = pinned;
        c.params.basis = basis;
        log(options, "rung " + basis.tag());
        return simulate(c, options).series;
      },
      ladder, tolerance);
}

RunOutcome run_convergence_scenario(const RunConfig& config, std::span<const BasisSpec> ladder, double tolerance,
                                    const RunOptions& options) {
  RunOutcome outcome;
  if (config.scenario == "surfaces") {
    outcome.exit_code = kExitConfigError;
    outcome.error = error_record("config_error", "invalid_argument", "surfaces has no cutoff dependence", std::nullopt);
    return outcome;
  }
  if (const auto v = config_violations(config); !v.empty()) {
    outcome.exit_code = kExitConfigError;
    outcome.error = error_record("config_error", "invalid_config", v.front(), std::nullopt);
    return outcome;
  }
  ConvergenceReport report;
  try {
    report = run_convergence(config, ladder, tolerance, options);
  } catch (const InvalidArgument& e) {
    outcome.exit_code = kExitConfigError;
    outcome.error = error_record("config_error", "invalid_argument", e.what(), std::nullopt);
    return outcome;
  }
  std::string text = "rung,n_max_x,n_max_y,completed,worst_change,worst_track,error\n";
  for (std::size_t i = 0; i < report.rungs.size(); ++i) {
    const auto& r = report.rungs[i];
    std::string worst;
    double w = -1.0;
    for (const auto& [name, change] : r.max_change) {
      if (change > w) {
        w = change;
        worst = name;
      }
    }
    std::string err = r.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    text += std::to_string(i) + "," + std::to_string(r.basis.n_max_x) + "," + std::to_string(r.basis.n_max_y) + "," +
            (r.completed ? "1" : "0") + "," + (r.max_change.empty() ? "" : num(r.worst_change)) + "," + worst + "," +
            err + "\n";
  }
  std::filesystem::create_directories(config.out_dir);
  const auto path = output_path(config, ".convergence.csv");
  write_text(path, text);
  outcome.files.push_back(path.string());
  bool all_completed = true;
  for (const auto& r : report.rungs) all_completed = all_completed && r.completed;
  if (!all_completed) {
    outcome.exit_code = kExitSolverAbort;
    for (const auto& r : report.rungs) {
      if (!r.completed) {
        outcome.error = error_record("solver_abort", "rung_failed", r.basis.tag() + ": " + r.error, std::nullopt);
        break;
      }
    }
  } else if (!report.converged) {
    outcome.exit_code = 1;
  }
  return outcome;
}

}  // namespace cidyn
