#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli/commands.hpp"
#include "clusterqed/hilbert.hpp"

namespace {

using namespace clusterqed;
using namespace clusterqed::cli;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

RunConfig load_config(const std::string& path) {
  if (path.empty()) return default_config();
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot open '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void emit(const Report& report, Format format, const std::string& out_path) {
  auto write = [&](std::ostream& os) {
    if (format == Format::Json) {
      write_json(os, report);
    } else {
      write_csv(os, report);
    }
  };
  if (out_path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ConfigError(fmt::format("--out: cannot write '{}'", out_path));
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-QED cluster-state generation and fusion simulator", "clusterqed-sim"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format_name = "csv";
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  bool exact_only = false;

  app.add_option("--config", config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed for sampled runs");
  auto* trials_opt = app.add_option("--trials", trials, "number of sampled trials (0 disables sampling)");
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_option("--format", format_name, "report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--exact-only", exact_only, "skip Monte Carlo sampling");

  struct Sub {
    const char* name;
    const char* help;
    Report (*run)(const RunConfig&, const RunOptions&);
  };
  const Sub subs[] = {
      {"generate", "exact and sampled four-atom generation round", cmd_generate},
      {"sweep", "generation round over a parameter grid", cmd_sweep},
      {"network", "outcome table and corrections for a linear-optics network", cmd_network},
      {"oracle", "cross-check the emission dynamics against independent integrations", cmd_oracle},
      {"fuse", "fuse two chains and optionally simulate growth", cmd_fuse},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    RunConfig config = load_config(config_path);
    RunOptions options;
    if (*seed_opt) options.seed = seed;
    if (*trials_opt) options.trials = trials;
    options.exact_only = exact_only;

    for (const auto& s : subs) {
      if (!app.got_subcommand(s.name)) continue;
      const Report report = s.run(config, options);
      emit(report, format_name == "json" ? Format::Json : Format::Csv, out_path);
      for (const auto& c : report.checks) {
        if (!c.passed) std::cerr << fmt::format("check failed: {} ({})\n", c.name, c.detail);
      }
      return report.all_passed() ? kExitOk : kExitCheckFailed;
    }
  } catch (const ResourceRefusal& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kExitResource;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConstructionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
