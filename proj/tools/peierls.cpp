#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "peierls/barrier.hpp"
#include "peierls/error.hpp"
#include "peierls/experiments.hpp"
#include "peierls/io.hpp"
#include "peierls/minimizer.hpp"

namespace {

using namespace peierls;

const std::vector<std::string> kStudies = {"spacing", "lowerbound", "approx", "counting", "theorem-mr", "mcor", "herm"};

// Raw flag values; only the ones given on the command line are applied.
struct Flags {
  std::string config_path;
  std::map<std::string, std::string> values;
  double x = 0.5;
  double y = 0.0;
  int steps = 100;
  bool plot = false;
};

void add_flag(CLI::App* cmd, Flags& flags, const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      "--" + key, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_path, "Run configuration file (key = value lines)");
  add_flag(cmd, flags, "n", "Perturbation index; studies take a comma separated list");
  add_flag(cmd, flags, "a", "Exponent of the cosine term");
  add_flag(cmd, flags, "k", "Smoothness index");
  add_flag(cmd, flags, "s", "Decay exponent of the bump (default (k + 2) a)");
  add_flag(cmd, flags, "delta", "Frequency exponent margin");
  add_flag(cmd, flags, "width", "Heteroclinic window in periods (0 = automatic)");
  add_flag(cmd, flags, "output", "Result CSV path; a JSON sidecar is written next to it");
  add_flag(cmd, flags, "seed", "Seed for randomized starts");
  add_flag(cmd, flags, "threads", "Worker threads (0 = hardware concurrency)");
  cmd->add_flag("--plot", flags.plot, "Also write gnuplot data next to the CSV");
}

// Flag values go through the config parser so both share one set of checks.
RunConfig load_config(const std::string& subcommand, const Flags& flags) {
  std::string text;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config '" + flags.config_path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    text = os.str();
  }
  RunConfig config;
  try {
    config = parse_config(text, subcommand);
  } catch (const ConfigError& e) {
    throw Error(ErrorKind::Config, flags.config_path + ": " + e.what());
  }
  if (config.subcommand != subcommand) {
    throw Error(ErrorKind::Config, "config is for '" + config.subcommand + "', not '" + subcommand + "'");
  }
  std::string overrides;
  std::vector<std::string> keys;
  for (const auto& [key, value] : flags.values) {
    const bool quoted = key == "symbol" || key == "function" || key == "output" || key == "init";
    std::string escaped;
    for (char c : value) {
      if (c == '"' || c == '\\') escaped += '\\';
      if (c == '\n') throw Error(ErrorKind::Config, "--" + key + ": value holds a line break");
      escaped += c;
    }
    overrides += key + " = " + (quoted ? "\"" + escaped + "\"" : escaped) + "\n";
    keys.push_back(key);
  }
  try {
    config = merge_config(std::move(config), overrides);
  } catch (const ConfigError& e) {
    const std::size_t line = static_cast<std::size_t>(e.line());
    if (line >= 1 && line <= keys.size()) {
      const std::string what = e.what();
      const std::size_t colon = what.find(": ");
      throw Error(ErrorKind::Config, "--" + keys[line - 1] + ": " + what.substr(colon + 2));
    }
    throw Error(ErrorKind::Config, e.what());
  }
  validate_config(config);
  return config;
}

std::string output_path(const RunConfig& config) {
  if (!config.output.empty()) return config.output;
  const char* dir = std::getenv("PEIERLS_OUTPUT_DIR");
  const std::filesystem::path base = dir && *dir ? dir : ".";
  return (base / (config.subcommand + ".csv")).string();
}

std::string plot_path(const std::string& csv) {
  std::filesystem::path p(csv);
  p.replace_extension(".dat");
  return p.string();
}

BarrierOptions barrier_options(const RunConfig& config) {
  BarrierOptions opts;
  opts.width = config.width;
  opts.threads = config.threads;
  opts.minimizer.seed = config.seed;
  return opts;
}

GeneratingFunction config_function(const RunConfig& config) {
  const PerturbationParams p = config_params(config);
  return make_named(config.function, p, config.q.empty() ? p.n : config.q.front());
}

Fields common_inputs(const RunConfig& config) {
  const PerturbationParams p = config_params(config);
  return {{"function", Cell{config.function}},
          {"n", Cell{static_cast<long long>(p.n)}},
          {"a", Cell{p.a}},
          {"k", Cell{static_cast<long long>(p.k)}},
          {"s", Cell{p.resolved_s()}},
          {"delta", Cell{p.delta}},
          {"width", Cell{static_cast<long long>(config.width)}},
          {"seed", Cell{std::to_string(config.seed)}}};
}

Fields report_fields(const SolveReport& r) {
  return {{"residual_inf", Cell{r.residual_inf}},
          {"iterations", Cell{static_cast<long long>(r.iterations)}},
          {"converged", Cell{r.converged}},
          {"action", Cell{r.action}},
          {"tail_distance", Cell{r.tail_distance}}};
}

std::string boundary_name(const Configuration& c) {
  if (const auto* per = std::get_if<Periodic>(&c.boundary)) {
    return "periodic " + std::to_string(per->p) + "/" + std::to_string(per->q);
  }
  if (std::holds_alternative<Heteroclinic01>(c.boundary)) return "heteroclinic 0-1";
  return "pinned ends";
}

void finish(const ResultRecord& record, const std::string& path) {
  write_results(record, path);
  std::cout << "wrote " << path << " and " << sidecar_path(path) << "\n";
}

int run_minimize(const RunConfig& config, const Flags& flags) {
  const GeneratingFunction h = config_function(config);
  const RotationSymbol symbol = RotationSymbol::parse(config.symbol);
  if (!symbol.is_rational()) {
    throw Error(ErrorKind::InvalidArgument, "minimize needs a rational symbol, got '" + config.symbol + "'");
  }
  MinimizerOptions opts;
  opts.seed = config.seed;
  ResultRecord record;
  record.timestamp = current_timestamp();
  record.command = "minimize";
  record.inputs = common_inputs(config);
  record.inputs.emplace_back("symbol", Cell{symbol.to_string()});
  record.inputs.emplace_back("init", Cell{config.init});

  Configuration result;
  SolveReport report;
  if (symbol.variant == SymbolVariant::Exact) {
    std::optional<Configuration> init;
    if (!config.init.empty()) {
      init = read_configuration_csv(config.init);
      init->boundary = Periodic{symbol.p, symbol.q};
      if (static_cast<long>(init->size()) != symbol.q) {
        throw Error(ErrorKind::InvalidArgument, "init file holds " + std::to_string(init->size()) +
                                                    " values, symbol needs " + std::to_string(symbol.q));
      }
    }
    MinimizeResult r = minimize_periodic(h, symbol.p, symbol.q, init, opts);
    result = std::move(r.config);
    report = r.report;
  } else {
    if (!config.init.empty()) throw Error(ErrorKind::InvalidArgument, "init files apply to periodic symbols only");
    AdvancingResult r = minimize_advancing(h, symbol.p, symbol.q, symbol.variant, config.width, opts);
    result = std::move(r.config);
    report = r.report;
    record.outputs.emplace_back("window_width", Cell{static_cast<long long>(r.width)});
  }
  record.outputs.emplace_back("boundary", Cell{boundary_name(result)});
  record.outputs.emplace_back("index_offset", Cell{static_cast<long long>(result.index_offset)});
  record.outputs.emplace_back("rotation_number", Cell{rotation_number(result)});
  record.solver = report_fields(report);
  record.solver.emplace_back("tolerance", Cell{opts.tolerance});
  record.table = configuration_table(result);
  const std::string path = output_path(config);
  finish(record, path);
  std::printf("action %.17g residual %.3e iterations %d%s\n", report.action, report.residual_inf, report.iterations,
              report.converged ? "" : " (not converged)");
  if (flags.plot) {
    Table t = record.table;
    std::string out = "# index value\n";
    for (const auto& row : t.rows) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%lld %.17g\n", std::get<long long>(row[0]), std::get<double>(row[1]));
      out += buf;
    }
    std::ofstream(plot_path(path)) << out;
  }
  return report.converged ? 0 : 1;
}

int run_barrier(const RunConfig& config, const Flags& flags) {
  const GeneratingFunction h = config_function(config);
  RotationSymbol symbol = RotationSymbol::parse(config.symbol);
  if (config.omega && !config.has("symbol")) symbol = RotationSymbol::irrational(*config.omega);
  const BarrierOptions opts = barrier_options(config);

  ResultRecord record;
  record.timestamp = current_timestamp();
  record.command = "barrier";
  record.inputs = common_inputs(config);
  record.inputs.emplace_back("symbol", Cell{symbol.to_string()});
  record.inputs.emplace_back("grid", Cell{static_cast<long long>(config.grid)});
  record.inputs.emplace_back("convergents", Cell{static_cast<long long>(config.convergents)});
  record.solver = {{"tolerance", Cell{opts.minimizer.tolerance}},
                   {"tail_tolerance", Cell{opts.minimizer.tail_tolerance}},
                   {"stabilization_tolerance", Cell{opts.stabilization_tolerance}}};

  const std::string path = output_path(config);
  if (config.xi) {
    const double xi = *config.xi;
    record.inputs.emplace_back("xi", Cell{xi});
    double value = 0.0;
    bool ok = true;
    if (symbol.is_rational()) {
      value = peierls_rational(h, symbol.p, symbol.q, symbol.variant, xi, opts);
    } else {
      const IrrationalValue iv = peierls_irrational(h, symbol.omega, xi, config.convergents, opts);
      value = iv.value;
      ok = iv.stable;
      record.outputs.emplace_back("error_estimate", Cell{iv.error_estimate});
      record.outputs.emplace_back("convergents_used", Cell{static_cast<long long>(iv.steps.size())});
    }
    record.table.columns = {"xi", "value", "converged", "status"};
    record.table.rows.push_back({Cell{xi}, Cell{value}, Cell{ok}, Cell{std::string(ok ? "ok" : "unstable")}});
    record.outputs.emplace_back("value", Cell{value});
    finish(record, path);
    std::printf("P(%.17g) = %.17g%s\n", xi, value, ok ? "" : " (not stabilized)");
    return 0;
  }
  const BarrierProfile profile = barrier_profile(h, symbol, config.grid, opts, config.convergents);
  record.table = profile_table(profile);
  record.outputs = {{"sup_value", Cell{profile.sup_value}}, {"all_converged", Cell{profile.metadata.converged}}};
  record.solver.emplace_back("worst_residual", Cell{profile.metadata.residual_inf});
  record.solver.emplace_back("iterations", Cell{static_cast<long long>(profile.metadata.iterations)});
  finish(record, path);
  if (flags.plot) emit_plot_data(profile, plot_path(path));
  std::printf("sup P = %.17g over %d points%s\n", profile.sup_value, config.grid,
              profile.metadata.converged ? "" : " (some points failed)");
  return 0;
}

int run_orbit(const RunConfig& config, const Flags& flags) {
  const GeneratingFunction h = config_function(config);
  if (flags.steps < 1 || flags.steps > 10000000) throw Error(ErrorKind::InvalidArgument, "steps must lie in [1, 1e7]");
  const std::vector<PhasePoint> orbit = twist_orbit(h, {flags.x, flags.y}, flags.steps);
  ResultRecord record;
  record.timestamp = current_timestamp();
  record.command = "orbit";
  record.inputs = common_inputs(config);
  record.inputs.emplace_back("x", Cell{flags.x});
  record.inputs.emplace_back("y", Cell{flags.y});
  record.inputs.emplace_back("steps", Cell{static_cast<long long>(flags.steps)});
  record.table.columns = {"step", "x", "y"};
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    record.table.rows.push_back({Cell{static_cast<long long>(i)}, Cell{orbit[i].x}, Cell{orbit[i].y}});
  }
  const double rho = (orbit.back().x - orbit.front().x) / flags.steps;
  record.outputs = {{"mean_rotation", Cell{rho}}};
  const std::string path = output_path(config);
  finish(record, path);
  if (flags.plot) {
    std::string out = "# x_mod_1 y\n";
    for (const auto& pt : orbit) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", pt.x - std::floor(pt.x), pt.y);
      out += buf;
    }
    std::ofstream(plot_path(path)) << out;
  }
  std::printf("mean rotation %.17g over %d steps\n", rho, flags.steps);
  return 0;
}

int run_study_command(const RunConfig& config, const Flags& flags) {
  const StudyResult study = run_study(config_spec(config));
  const std::string path = output_path(config);
  finish(study_record(study, config), path);
  if (flags.plot) emit_plot_data(study, plot_path(path));
  for (const NamedFit& f : study.fits) {
    std::printf("fit %s: slope %.6g r2 %.6g%s\n", f.name.c_str(), f.fit.slope, f.fit.r2,
                f.low_confidence ? " (low confidence)" : "");
  }
  for (const Check& c : study.checks) {
    std::printf("%s %s: value %.6g bound %.6g\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.bound);
  }
  return study.passed() ? 0 : 1;
}

int fail(const std::string& kind, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "peierls: error[" << kind << "]: " << line << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peierls barriers and invariant circles of twist maps"};
  app.require_subcommand(1);
  Flags flags;

  std::map<std::string, CLI::App*> commands;
  auto* minimize = app.add_subcommand("minimize", "Minimal periodic orbit or heteroclinic for a rational symbol");
  auto* barrier = app.add_subcommand("barrier", "Peierls barrier at one xi or on a uniform grid");
  auto* orbit = app.add_subcommand("orbit", "Iterate the twist map from a phase point");
  commands = {{"minimize", minimize}, {"barrier", barrier}, {"orbit", orbit}};
  for (auto* cmd : {minimize, barrier, orbit}) {
    add_common(cmd, flags);
    add_flag(cmd, flags, "function", "h0, hn, hbar_n or htilde_n");
  }
  add_flag(minimize, flags, "symbol", "p/q, p/q+, p/q- or 0+");
  add_flag(minimize, flags, "init", "Starting configuration CSV (index, value)");
  add_flag(minimize, flags, "q", "Rescaling denominator for htilde_n");
  add_flag(barrier, flags, "symbol", "p/q, p/q+, p/q-, 0+ or a decimal omega");
  add_flag(barrier, flags, "omega", "Irrational rotation number (used when --symbol is absent)");
  add_flag(barrier, flags, "xi", "Single evaluation point; omit for a profile");
  add_flag(barrier, flags, "grid", "Profile points");
  add_flag(barrier, flags, "convergents", "Convergents for irrational symbols");
  add_flag(barrier, flags, "q", "Rescaling denominator for htilde_n");
  orbit->add_option("--x", flags.x, "Initial x");
  orbit->add_option("--y", flags.y, "Initial y");
  orbit->add_option("--steps", flags.steps, "Number of iterates");

  for (const auto& name : kStudies) {
    auto* cmd = app.add_subcommand(name, "Run the " + name + " study; exit 1 if a check fails");
    add_common(cmd, flags);
    add_flag(cmd, flags, "omega", "Frequency coefficient; the sign picks the orientation");
    add_flag(cmd, flags, "grid", "Profile points");
    add_flag(cmd, flags, "convergents", "Convergents for irrational symbols");
    add_flag(cmd, flags, "window", "xi samples across the central window");
    add_flag(cmd, flags, "r", "Norm order");
    add_flag(cmd, flags, "q", "Denominators or rescaling factors");
    commands[name] = cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  std::string name;
  for (const auto& [n, cmd] : commands) {
    if (cmd->parsed()) name = n;
  }
  try {
    const RunConfig config = load_config(name, flags);
    if (name == "minimize") return run_minimize(config, flags);
    if (name == "barrier") return run_barrier(config, flags);
    if (name == "orbit") return run_orbit(config, flags);
    return run_study_command(config, flags);
  } catch (const Error& e) {
    return fail(error_kind_name(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
