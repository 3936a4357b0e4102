// Command-line runner: run / validate / convergence / list-scenarios.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cidyn/scenarios.hpp"

namespace {

constexpr const char* kOutDirEnv = "CIDYN_OUT_DIR";

struct Overrides {
  std::string config_path;
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string solver;
  std::optional<int> n_traj;
  std::string cutoffs;
  bool serial = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("scenario", o.scenario, "Scenario name (see list-scenarios)");
  app->add_option("--config", o.config_path, "key = value config file or a run's .json sidecar");
  app->add_option("--out-dir", o.out_dir, std::string("Output directory (default: $") + kOutDirEnv + " or ./cidyn-out)");
  app->add_option("--seed", o.seed, "Trajectory seed");
  app->add_option("--solver", o.solver, "schrodinger | lindblad | trajectories | meanfield");
  app->add_option("--n-traj", o.n_traj, "Number of trajectories");
  app->add_option("--cutoffs", o.cutoffs, "Fock cutoffs NX,NY");
  app->add_flag("--serial", o.serial, "Use the serial reference kernels");
  app->add_flag("-q,--quiet", o.quiet, "No progress output");
}

void print_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e << '\n';
}

// Parses the config (or scenario defaults) and applies command-line
// overrides. Returns nullopt after printing every problem.
std::optional<cidyn::RunConfig> load(const Overrides& o) {
  using namespace cidyn;
  std::optional<std::string> scenario;
  if (!o.scenario.empty()) scenario = o.scenario;
  ConfigResult r = o.config_path.empty() ? parse_config("", scenario) : validate_config(o.config_path, scenario);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  RunConfig& c = r.config;
  if (!o.solver.empty()) {
    if (const auto s = parse_solver(o.solver)) {
      c.solver = *s;
    } else {
      r.errors.push_back("--solver: unknown solver '" + o.solver + "'");
    }
  }
  if (o.seed) c.seed = *o.seed;
  if (o.n_traj) c.n_traj = *o.n_traj;
  if (!o.cutoffs.empty()) {
    int nx = 0;
    int ny = 0;
    char tail = 0;
    if (std::sscanf(o.cutoffs.c_str(), "%d,%d%c", &nx, &ny, &tail) == 2) {
      c.params.basis = {nx, ny};
    } else {
      r.errors.push_back("--cutoffs: expected NX,NY, got '" + o.cutoffs + "'");
    }
  }
  if (!o.out_dir.empty()) {
    c.out_dir = o.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env && c.out_dir == RunConfig{}.out_dir) {
    c.out_dir = env;
  }
  // overrides can introduce new violations (e.g. --solver schrodinger with decay)
  if (r.errors.empty()) {
    for (auto& v : config_violations(c)) r.errors.push_back(std::move(v));
  }
  if (!r.errors.empty()) {
    print_errors(r.errors);
    return std::nullopt;
  }
  return c;
}

cidyn::RunOptions run_options(const Overrides& o) {
  cidyn::RunOptions opts;
  opts.exec = o.serial ? cidyn::kernels::Exec::serial : cidyn::kernels::Exec::parallel;
  if (!o.quiet) opts.log = &std::cerr;
  return opts;
}

int report(const cidyn::RunOutcome& outcome) {
  for (const auto& f : outcome.files) std::cout << f << '\n';
  if (!outcome.error.empty()) std::cerr << outcome.error << '\n';
  return outcome.exit_code;
}

std::vector<cidyn::BasisSpec> parse_ladder(const std::string& text) {
  std::vector<cidyn::BasisSpec> ladder;
  std::stringstream in(text);
  std::string rung;
  while (std::getline(in, rung, ';')) {
    int nx = 0;
    int ny = 0;
    char tail = 0;
    if (std::sscanf(rung.c_str(), "%d,%d%c", &nx, &ny, &tail) != 2) {
      throw cidyn::InvalidArgument("--ladder: bad rung '" + rung + "', expected NX,NY;NX,NY;...");
    }
    ladder.push_back({nx, ny});
  }
  return ladder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-phonon dynamics of two Rydberg ions near a conical intersection"};
  app.require_subcommand(1);

  Overrides run_o;
  std::vector<std::string> sweep;
  auto* run = app.add_subcommand("run", "Run a scenario and write <stem>.csv and <stem>.json");
  add_common(run, run_o);
  run->add_option("--sweep", sweep, "Run several config files, each into <out-dir>/<file stem>/");

  Overrides val_o;
  auto* validate = app.add_subcommand("validate", "Print the normalized config or every violation");
  add_common(validate, val_o);

  Overrides conv_o;
  std::string ladder_text = "12,8;16,10;20,12";
  double tolerance = 1e-4;
  auto* conv = app.add_subcommand("convergence", "Repeat a scenario over a ladder of Fock cutoffs");
  add_common(conv, conv_o);
  conv->add_option("--ladder", ladder_text, "Cutoff rungs NX,NY;NX,NY;...")->capture_default_str();
  conv->add_option("--tolerance", tolerance, "Max track change accepted at the final rung")->capture_default_str();

  auto* list = app.add_subcommand("list-scenarios", "List the named scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cidyn::kExitConfigError;
  }

  using namespace cidyn;
  try {
    if (list->parsed()) {
      for (const auto& name : scenario_names()) {
        const RunConfig c = scenario_defaults(name);
        std::cout << name << "  solver=" << (name == "surfaces" ? "none" : solver_name(c.solver)) << " t1=" << c.t1
                  << " G=(" << c.params.G_x << "," << c.params.G_y << ") gamma_S=" << c.params.gamma_S << '\n';
      }
      return kExitOk;
    }
    if (validate->parsed()) {
      const auto c = load(val_o);
      if (!c) return kExitConfigError;
      std::cout << serialize_config(*c);
      return kExitOk;
    }
    if (conv->parsed()) {
      const auto c = load(conv_o);
      if (!c) return kExitConfigError;
      const auto ladder = parse_ladder(ladder_text);
      return report(run_convergence_scenario(*c, ladder, tolerance, run_options(conv_o)));
    }
    if (run->parsed()) {
      if (sweep.empty()) {
        const auto c = load(run_o);
        if (!c) return kExitConfigError;
        return report(run_scenario(*c, run_options(run_o)));
      }
      // independent configs, one isolated directory each
      std::vector<RunConfig> configs;
      for (const auto& path : sweep) {
        Overrides o = run_o;
        o.config_path = path;
        auto c = load(o);
        if (!c) return kExitConfigError;
        c->out_dir = (std::filesystem::path(c->out_dir) / std::filesystem::path(path).stem()).string();
        configs.push_back(std::move(*c));
      }
      std::vector<RunOutcome> outcomes(configs.size());
      RunOptions opts = run_options(run_o);
      opts.exec = kernels::Exec::serial;  // parallelism goes to the fan-out
      opts.log = nullptr;
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < static_cast<int>(configs.size()); ++i) outcomes[i] = run_scenario(configs[i], opts);
      int worst = kExitOk;
      for (const auto& o : outcomes) worst = std::max(worst, report(o));
      return worst;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverAbort;
  }
  return kExitOk;
}
