// Command-line front end: bundled experiments, scenario files and the
// Monte-Carlo cross-check.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beamsense/beamsense.hpp"

namespace fs = std::filesystem;
using namespace beamsense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitValidation = 2;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::optional<unsigned> workers;
  std::string out;
  std::string format;
};

struct ScenarioOptions {
  std::string config;
  std::string preset;
  std::vector<std::string> sets;
  bool print_config = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario build_scenario(const std::string& default_preset, const ScenarioOptions& so, const GlobalOptions& g) {
  std::string text, origin;
  if (!so.config.empty()) {
    text = read_file(so.config);
    origin = so.config;
  } else {
    const Preset& p = find_preset(so.preset.empty() ? default_preset : so.preset);
    text = p.ini;
    origin = std::string("preset:") + p.name;
  }
  auto tree = parse_ini_tree(text, origin);
  for (const auto& assignment : so.sets) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ScenarioError("--set " + assignment, "expected section.key=value");
    tree.put(assignment.substr(0, eq), assignment.substr(eq + 1));
  }
  if (g.seed) {
    tree.put("output.seed", std::to_string(*g.seed));
    if (tree.find("mc") != tree.not_found()) tree.put("mc.seed", std::to_string(*g.seed));
  }
  if (g.n_max) tree.put("scenario.n_max", std::to_string(*g.n_max));
  if (g.workers) tree.put("output.workers", std::to_string(*g.workers));
  if (!g.format.empty()) tree.put("output.format", g.format);
  return scenario_from_tree(tree);
}

std::string output_dir(const Scenario& s, const GlobalOptions& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("BEAMSENSE_OUT_DIR"); env && *env) return env;
  return s.output.path;
}

std::string table_file(const Scenario& s, const NamedTable& t) {
  const std::string stem = t.name == s.name ? s.name : s.name + "-" + t.name;
  return stem + (s.output.format == TableFormat::kCsv ? ".csv" : ".jsonl");
}

void write_tables(const Scenario& s, const RunResult& r, const std::string& dir, std::ostream& summary_os) {
  for (const auto& t : r.tables) {
    const auto* db = t.db ? &*t.db : nullptr;
    const auto* mc = t.mc_noise.empty() ? nullptr : &t.mc_noise;
    if (dir.empty()) {
      if (r.tables.size() > 1) std::cout << "# table: " << t.name << '\n';
      write_table(std::cout, t.rows, s.output.format, db, mc);
      continue;
    }
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / table_file(s, t);
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_table(out, t.rows, s.output.format, db, mc);
    if (!out) throw Error("write failed for '" + path.string() + "'");
    summary_os << "wrote " << path.string() << " (" << t.rows.size() << " rows)\n";
  }
}

void print_summary(const Scenario& s, const RunResult& r, std::ostream& os) {
  os << "# summary: " << s.name << '\n';
  std::size_t width = 0;
  for (const auto& item : r.summary) width = std::max(width, item.key.size());
  for (const auto& item : r.summary) {
    os << "  " << std::left << std::setw(static_cast<int>(width)) << item.key << " = " << std::setprecision(6)
       << item.value << ' ' << item.unit;
    if (item.expected)
      os << "   [reference " << *item.expected << " +- " << item.tolerance << ": "
         << (within_expectation(item) ? "ok" : "MISMATCH") << ']';
    os << '\n';
  }
}

int execute(const std::string& default_preset, const ScenarioOptions& so, const GlobalOptions& g) {
  const Scenario s = build_scenario(default_preset, so, g);
  if (so.print_config) {
    std::cout << to_ini(s);
    return kExitOk;
  }
  RunResult r = run(s);
  annotate_expectations(s, r);
  const std::string dir = output_dir(s, g);
  std::ostream& summary_os = dir.empty() && !r.tables.empty() ? std::cerr : std::cout;
  write_tables(s, r, dir, summary_os);
  print_summary(s, r, summary_os);
  return kExitOk;
}

int mc_validate(const McConfig& cfg, const GlobalOptions& g) {
  const auto checks = run_mc_checks(cfg, g.n_max.value_or(kDefaultNmax));
  bool ok = true;
  std::cout << "check,analytic,monte_carlo,rel_deviation,tolerance,status\n";
  for (const auto& c : checks) {
    ok = ok && c.passed();
    std::cout << c.name << ',' << std::setprecision(10) << c.analytic << ',' << c.monte_carlo << ','
              << std::setprecision(4) << c.deviation() << ',' << c.tolerance << ','
              << (c.passed() ? "PASS" : "FAIL") << '\n';
  }
  return ok ? kExitOk : kExitNumeric;
}

void add_scenario_options(CLI::App* cmd, ScenarioOptions& so, bool positional_config) {
  if (positional_config)
    cmd->add_option("config", so.config, "Scenario file (INI)")->check(CLI::ExistingFile);
  else
    cmd->add_option("--config", so.config, "Scenario file replacing the built-in defaults")->check(CLI::ExistingFile);
  cmd->add_option("--preset", so.preset, "Start from a bundled preset");
  cmd->add_option("--set", so.sets, "Override a key: section.key=value (repeatable)");
  cmd->add_flag("--print-config", so.print_config, "Print the resolved scenario as INI and exit");
  cmd->get_option("--set")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-limited beam displacement and tilt metrology simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for traces and Monte-Carlo sampling");
  app.add_option("--out", g.out, "Output directory (default: $BEAMSENSE_OUT_DIR, then [output] path, then stdout)");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json-lines"}));
  app.add_option("--nmax", g.n_max, "Hermite-Gauss truncation order")->check(CLI::Range(1, 4000));
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");

  struct Command {
    const char* name;
    const char* preset;
    const char* help;
  };
  const std::vector<Command> commands{
      {"qnl", "qnl-table", "Quantum noise limits (default: qnl-table preset)"},
      {"split-scan", "fig-split-scan", "Split-detector z scan (default: fig-split-scan preset)"},
      {"homodyne-scan", "fig-homodyne-scan", "Homodyne LO-phase scan (default: fig-homodyne-scan preset)"},
      {"efficiency", "efficiency", "Split vs homodyne efficiency ratio (default: efficiency preset)"},
      {"squeeze-transfer", "squeeze-transfer", "Flipped-mode to TEM10 squeezing (default: squeeze-transfer preset)"},
  };
  std::vector<ScenarioOptions> options(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    subs.push_back(app.add_subcommand(commands[i].name, commands[i].help));
    add_scenario_options(subs.back(), options[i], false);
  }

  ScenarioOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario file or a bundled preset");
  add_scenario_options(run_cmd, run_opts, true);
  bool list_presets = false;
  run_cmd->add_flag("--list", list_presets, "List bundled presets");

  McConfig mc_cfg;
  CLI::App* mc_cmd = app.add_subcommand("mc-validate", "Monte-Carlo cross-check of the analytic noise powers");
  mc_cmd->add_option("--samples", mc_cfg.samples, "Samples per check")->capture_default_str();
  mc_cmd->add_option("--batch", mc_cfg.batch, "Samples per scheduled chunk")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) return execute(commands[i].preset, options[i], g);
    if (run_cmd->parsed()) {
      if (list_presets) {
        for (const auto& p : presets()) std::cout << std::left << std::setw(20) << p.name << p.description << '\n';
        return kExitOk;
      }
      if (run_opts.config.empty() && run_opts.preset.empty())
        throw UsageError("run needs a scenario file or --preset NAME (see run --list)");
      return execute("", run_opts, g);
    }
    if (mc_cmd->parsed()) {
      if (g.seed) mc_cfg.seed = *g.seed;
      mc_cfg.workers = g.workers.value_or(0);
      mc_cfg.validate();
      return mc_validate(mc_cfg, g);
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TruncationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
