#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "potfield/error.hpp"

namespace {

using potfield::app::RunConfig;

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets,
                         const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : potfield::app::load_config(config_path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw potfield::Error(potfield::ErrorCode::InvalidArgument, "--set expects key=value, got '" + kv + "'");
    }
    potfield::app::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (out) cfg.out = *out;
  if (seed) cfg.gp_seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential-field analysis of multi-asset price trajectories"};
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool print_defaults = false;

  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides 'out')");
  app.add_option("--seed", seed, "optimizer seed; simulation seed for synth");
  app.add_option("--set", sets, "override one config key (key=value), repeatable");
  app.add_flag("--print-defaults", print_defaults, "print every config key with its default and exit");

  app.fallthrough();  // global flags may follow the subcommand
  auto* lyap = app.add_subcommand("lyapunov", "Lyapunov exponents and stability verdict");
  auto* analyze = app.add_subcommand("analyze", "attractor analysis of one window");
  auto* evolve = app.add_subcommand("evolve", "attractor evolution over sub-windows");
  auto* coh = app.add_subcommand("coherence", "wavelet coherence of two assets");
  auto* synth = app.add_subcommand("synth", "simulate a trajectory from a spec file");
  std::string spec_file;
  synth->add_option("spec", spec_file, "synth spec file (defaults to --config)");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : potfield::app::kExitData;
  }

  if (print_defaults) {
    std::cout << potfield::app::defaults_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return potfield::app::kExitData;
  }

  try {
    if (synth->parsed()) {
      const std::string path = spec_file.empty() ? config_path : spec_file;
      if (path.empty()) throw potfield::Error(potfield::ErrorCode::InvalidArgument, "synth needs a spec file");
      return potfield::app::cmd_synth(path, seed.value_or(42), out.value_or("out"));
    }
    const RunConfig cfg = resolve_config(config_path, sets, out, seed);
    if (lyap->parsed()) return potfield::app::cmd_lyapunov(cfg, cfg.out);
    if (analyze->parsed()) return potfield::app::cmd_analyze(cfg, cfg.out);
    if (evolve->parsed()) return potfield::app::cmd_evolve(cfg, cfg.out);
    if (coh->parsed()) return potfield::app::cmd_coherence(cfg, cfg.out);
  } catch (const potfield::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return potfield::is_numerical(e.code()) ? potfield::app::kExitNumerical : potfield::app::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return potfield::app::kExitNumerical;
  }
  return potfield::app::kExitData;
}
