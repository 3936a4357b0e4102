#include "cidyn/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cidyn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  // shortest text that parses back to the same double
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_complex(Complex z) { return format_double(z.real()) + "," + format_double(z.imag()); }

double parse_double(const std::string& text) {
  std::string s = trim(text);
  double scale = 1.0;
  // "2pi*0.22" is accepted for angular frequencies given in MHz
  if (s.rfind("2pi*", 0) == 0) {
    scale = kTwoPi;
    s = s.substr(4);
  }
  if (s.empty()) throw InvalidArgument("empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw InvalidArgument("'" + text + "' is not a number");
  return scale * v;
}

long long parse_integer(const std::string& text) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw InvalidArgument("'" + text + "' is not an integer");
  }
  return v;
}

int parse_int(const std::string& text) {
  const long long v = parse_integer(text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw InvalidArgument("'" + text + "' is out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty() || s[0] == '-') throw InvalidArgument("seed must be a non-negative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw InvalidArgument("'" + text + "' is not a seed");
  return v;
}

Complex parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return {parse_double(text), 0.0};
  return {parse_double(text.substr(0, comma)), parse_double(text.substr(comma + 1))};
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field real_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Field param_field(double SystemParams::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.params.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.params.*member); }};
}

Field step_field(double StepPolicy::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.step.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.step.*member); }};
}

Field cutoff_field(int BasisSpec::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.params.basis.*member = parse_int(v); },
          [member](const RunConfig& c) { return std::to_string(c.params.basis.*member); }};
}

// Serialization order is the order of this table.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"scenario", {[](RunConfig& c, const std::string& v) { c.scenario = trim(v); },
                    [](const RunConfig& c) { return c.scenario; }}},
      {"solver", {[](RunConfig& c, const std::string& v) {
                    const auto s = parse_solver(trim(v));
                    if (!s) throw InvalidArgument("unknown solver '" + trim(v) +
                                                  "' (schrodinger, lindblad, trajectories, meanfield)");
                    c.solver = *s;
                  },
                  [](const RunConfig& c) { return std::string(solver_name(c.solver)); }}},
      {"omega_x", param_field(&SystemParams::omega_x)},
      {"omega_y", param_field(&SystemParams::omega_y)},
      {"G_x", param_field(&SystemParams::G_x)},
      {"G_y", param_field(&SystemParams::G_y)},
      {"eta_x", param_field(&SystemParams::eta_x)},
      {"eta_y", param_field(&SystemParams::eta_y)},
      {"gamma_S", param_field(&SystemParams::gamma_S)},
      {"gamma_P", param_field(&SystemParams::gamma_P)},
      {"decay_state", {[](RunConfig& c, const std::string& v) { c.decay_state = trim(v); },
                       [](const RunConfig& c) { return c.decay_state; }}},
      {"n_max_x", cutoff_field(&BasisSpec::n_max_x)},
      {"n_max_y", cutoff_field(&BasisSpec::n_max_y)},
      {"alpha_x", {[](RunConfig& c, const std::string& v) { c.alpha_x = parse_complex(v); },
                   [](const RunConfig& c) { return format_complex(c.alpha_x); }}},
      {"alpha_y", {[](RunConfig& c, const std::string& v) { c.alpha_y = parse_complex(v); },
                   [](const RunConfig& c) { return format_complex(c.alpha_y); }}},
      {"spins", {[](RunConfig& c, const std::string& v) { c.spins = parse_spin_config(trim(v)); },
                 [](const RunConfig& c) { return spin_config_name(c.spins); }}},
      {"t0", real_field(&RunConfig::t0)},
      {"t1", real_field(&RunConfig::t1)},
      {"output_interval", real_field(&RunConfig::output_interval)},
      {"step_factor", step_field(&StepPolicy::step_factor)},
      {"max_step", step_field(&StepPolicy::max_step)},
      {"n_traj", {[](RunConfig& c, const std::string& v) { c.n_traj = parse_int(v); },
                  [](const RunConfig& c) { return std::to_string(c.n_traj); }}},
      {"seed", {[](RunConfig& c, const std::string& v) { c.seed = parse_seed(v); },
                [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"out_dir", {[](RunConfig& c, const std::string& v) { c.out_dir = trim(v); },
                   [](const RunConfig& c) { return c.out_dir; }}},
      {"prefix", {[](RunConfig& c, const std::string& v) { c.prefix = trim(v); },
                  [](const RunConfig& c) { return c.prefix; }}},
      {"surface_extent_nm", real_field(&RunConfig::surface_extent_nm)},
      {"surface_points", {[](RunConfig& c, const std::string& v) { c.surface_points = parse_int(v); },
                          [](const RunConfig& c) { return std::to_string(c.surface_points); }}},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

constexpr std::string_view kLifetimePrefix = "lifetime.";

struct Line {
  int number;
  std::string key;
  std::string value;
};

}  // namespace

std::string_view solver_name(Solver s) {
  switch (s) {
    case Solver::schrodinger:
      return "schrodinger";
    case Solver::lindblad:
      return "lindblad";
    case Solver::trajectories:
      return "trajectories";
    case Solver::meanfield:
      return "meanfield";
  }
  return "?";
}

std::optional<Solver> parse_solver(std::string_view name) {
  for (Solver s : {Solver::schrodinger, Solver::lindblad, Solver::trajectories, Solver::meanfield}) {
    if (solver_name(s) == name) return s;
  }
  return std::nullopt;
}

LifetimeTable RunConfig::lifetime_table() const {
  LifetimeTable table = LifetimeTable::standard();
  for (const auto& [label, value] : lifetimes) table.set(label, value);
  return table;
}

bool RunConfig::operator==(const RunConfig& o) const {
  const SystemParams& a = params;
  const SystemParams& b = o.params;
  return scenario == o.scenario && a.omega_x == b.omega_x && a.omega_y == b.omega_y && a.G_x == b.G_x &&
         a.G_y == b.G_y && a.eta_x == b.eta_x && a.eta_y == b.eta_y && a.gamma_S == b.gamma_S &&
         a.gamma_P == b.gamma_P && a.basis == b.basis && alpha_x == o.alpha_x && alpha_y == o.alpha_y &&
         spins == o.spins && t0 == o.t0 && t1 == o.t1 && output_interval == o.output_interval &&
         step.step_factor == o.step.step_factor && step.max_step == o.step.max_step && solver == o.solver &&
         n_traj == o.n_traj && seed == o.seed && out_dir == o.out_dir && prefix == o.prefix &&
         surface_extent_nm == o.surface_extent_nm && surface_points == o.surface_points &&
         lifetimes == o.lifetimes && decay_state == o.decay_state;
}

std::vector<std::string> scenario_names() {
  return {"fig2-weak", "fig2-strong", "fig5-weak", "fig5-strong", "fig6-weak",
          "fig6-strong", "fig7-weak", "fig7-strong", "surfaces", "meanfield"};
}

bool is_scenario(std::string_view name) {
  for (const auto& n : scenario_names()) {
    if (n == name) return true;
  }
  return false;
}

RunConfig scenario_defaults(std::string_view name) {
  if (!is_scenario(name)) {
    std::string msg = "unknown scenario '" + std::string(name) + "'; available:";
    for (const auto& n : scenario_names()) msg += " " + n;
    throw InvalidArgument(msg);
  }
  RunConfig c;
  c.scenario = std::string(name);
  const bool strong = name.ends_with("-strong");
  if (strong) {
    c.params.G_x = kTwoPi * 1.0;
    c.params.G_y = kTwoPi * 1.0;
  }
  if (name.starts_with("fig2")) {
    // coherent: Figs. 2 and 3 share these runs
    c.params.gamma_S = 0.0;
    c.solver = Solver::schrodinger;
    c.t1 = 10.0;
    c.output_interval = 0.02;
    // the norm check (1e-8 over the run) needs a finer step than the dissipative runs
    c.step.step_factor = 0.02;
  } else if (name == "meanfield") {
    c.solver = Solver::meanfield;
    c.output_interval = 0.02;
  }
  return c;
}

std::vector<std::string> config_violations(const RunConfig& c) {
  std::vector<std::string> v = c.params.violations();
  if (!is_scenario(c.scenario)) v.push_back("scenario '" + c.scenario + "' is not a known scenario");
  if (!std::isfinite(c.t0) || !std::isfinite(c.t1) || !(c.t1 > c.t0)) v.push_back("t1 must be greater than t0");
  if (!(c.output_interval > 0.0)) {
    v.push_back("output_interval must be > 0");
  } else if (c.t1 > c.t0) {
    const double ratio = (c.t1 - c.t0) / c.output_interval;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio) || std::llround(ratio) < 1) {
      v.push_back("output_interval must divide t1 - t0");
    }
  }
  if (!(c.step.step_factor > 0.0)) v.push_back("step_factor must be > 0");
  if (!(c.step.max_step > 0.0)) v.push_back("max_step must be > 0");
  if (c.n_traj < 1) v.push_back("n_traj must be >= 1");
  if (!(c.surface_extent_nm > 0.0)) v.push_back("surface_extent_nm must be > 0");
  if (c.surface_points < 3 || c.surface_points % 2 == 0) {
    v.push_back("surface_points must be odd and >= 3 (the origin has to be a grid point)");
  }
  if (!std::isfinite(std::abs(c.alpha_x)) || !std::isfinite(std::abs(c.alpha_y))) {
    v.push_back("alpha_x and alpha_y must be finite");
  }
  if (c.solver == Solver::schrodinger && (c.params.gamma_S != 0.0 || c.params.gamma_P != 0.0)) {
    v.push_back("solver schrodinger ignores decay; set gamma_S = gamma_P = 0 or pick lindblad/trajectories");
  }
  for (const auto& [label, value] : c.lifetimes) {
    if (!(value > 0.0)) v.push_back("lifetime." + label + " must be > 0");
  }
  const bool lifetimes_ok = std::all_of(c.lifetimes.begin(), c.lifetimes.end(), [](const auto& e) { return e.second > 0.0; });
  if (!c.decay_state.empty() && lifetimes_ok) {
    const auto table = c.lifetime_table();
    if (!table.entries().contains(c.decay_state)) {
      v.push_back("decay_state '" + c.decay_state + "' is not in the lifetime table");
    }
  }
  return v;
}

ConfigResult parse_config(std::string_view text, std::optional<std::string> scenario_override) {
  ConfigResult result;
  std::vector<Line> lines;
  {
    std::istringstream in{std::string(text)};
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
      ++number;
      if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        result.errors.push_back("line " + std::to_string(number) + ": expected 'key = value', got '" + line + "'");
        continue;
      }
      lines.push_back({number, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
  }

  std::set<std::string> seen;
  std::string scenario = "fig5-weak";
  for (const auto& l : lines) {
    if (!seen.insert(l.key).second) {
      result.errors.push_back("line " + std::to_string(l.number) + ": key '" + l.key + "' given twice");
    }
    if (l.key == "scenario") scenario = l.value;
  }
  if (scenario_override) scenario = *scenario_override;
  try {
    result.config = scenario_defaults(scenario);
  } catch (const InvalidArgument& e) {
    result.errors.push_back(e.what());
    result.config = scenario_defaults("fig5-weak");
    result.config.scenario = scenario;
  }

  for (const auto& l : lines) {
    if (l.key == "scenario") continue;
    const std::string where = "line " + std::to_string(l.number) + ", key '" + l.key + "': ";
    try {
      if (l.key.starts_with(kLifetimePrefix)) {
        const std::string label = l.key.substr(kLifetimePrefix.size());
        if (label.empty()) throw InvalidArgument("missing state label");
        result.config.lifetimes[label] = parse_double(l.value);
      } else if (const Field* f = find_field(l.key)) {
        f->set(result.config, l.value);
      } else {
        result.warnings.push_back(where + "unknown key ignored");
      }
    } catch (const std::exception& e) {
      result.errors.push_back(where + e.what());
    }
  }

  SystemParams& p = result.config.params;
  const bool frequency_or_eta_given = seen.contains("eta_x") || seen.contains("omega_x") || seen.contains("omega_y");
  if (!seen.contains("eta_y") && frequency_or_eta_given && p.omega_x > 0.0 && p.omega_y > 0.0) {
    p.eta_y = SystemParams::scaled_eta(p.eta_x, p.omega_x, p.omega_y);
  }
  if (!result.config.decay_state.empty()) {
    if (seen.contains("gamma_S")) {
      result.errors.push_back("gamma_S and decay_state are mutually exclusive");
    } else {
      try {
        const auto table = result.config.lifetime_table();
        if (table.entries().contains(result.config.decay_state)) {
          p.gamma_S = decay_rate(result.config.decay_state, table);
        }
      } catch (const InvalidArgument&) {
        // bad lifetime entries are reported below
      }
    }
  }
  for (auto& v : config_violations(result.config)) {
    // unknown scenario already reported
    if (v.starts_with("scenario '")) continue;
    result.errors.push_back(std::move(v));
  }
  return result;
}

ConfigResult validate_config(const std::string& path, std::optional<std::string> scenario_override) {
  std::ifstream in(path);
  if (!in) {
    ConfigResult r;
    r.errors.push_back("cannot read '" + path + "'");
    return r;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (path.ends_with(".json")) {
    // a run sidecar: its "config" object holds the normalized key/value form
    try {
      const auto doc = nlohmann::json::parse(text);
      std::string converted;
      for (const auto& [key, value] : doc.at("config").items()) {
        converted += key + " = " + value.get<std::string>() + "\n";
      }
      text = std::move(converted);
    } catch (const std::exception& e) {
      ConfigResult r;
      r.errors.push_back("'" + path + "': not a run sidecar (" + e.what() + ")");
      return r;
    }
  }
  return parse_config(text, std::move(scenario_override));
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) {
    // gamma_S follows from decay_state when that is set
    if (name == "gamma_S" && !config.decay_state.empty()) continue;
    out.emplace_back(name, field.get(config));
  }
  for (const auto& [label, value] : config.lifetimes) {
    out.emplace_back(std::string(kLifetimePrefix) + label, format_double(value));
  }
  return out;
}

std::string serialize_config(const RunConfig& config) {
  std::string text;
  for (const auto& [key, value] : config_entries(config)) text += key + " = " + value + "\n";
  return text;
}

}  // namespace cidyn
