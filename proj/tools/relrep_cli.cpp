// Command-line front end.  Links only against the C interface.
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relrep/relrep.h"

namespace {

enum class Verbosity { quiet, info, debug };

Verbosity verbosity_from_env() {
  const char* level = std::getenv("RELREP_LOG");
  if (!level) return Verbosity::info;
  const std::string s(level);
  if (s == "quiet" || s == "0" || s == "error") return Verbosity::quiet;
  if (s == "debug" || s == "2") return Verbosity::debug;
  return Verbosity::info;
}

int exit_code(rr_status status) {
  switch (status) {
    case RR_OK: return 0;
    case RR_ERR_CONFIG:
    case RR_ERR_ARGUMENT:
    case RR_ERR_DOMAIN:
    case RR_ERR_UNSUPPORTED_ORDER: return 2;
    case RR_ERR_NUMERICAL:
    case RR_ERR_NOT_CONVERGED:
    case RR_ERR_DEGENERATE: return 3;
    case RR_ERR_SINGULARITY_GUARD:
    case RR_ERR_NOT_IDENTIFIABLE: return 4;
    case RR_ERR_IO:
    case RR_ERR_INTERNAL: return 1;
  }
  return 1;
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool print_defaults = false;
};

int run(rr_experiment_kind kind, const std::string& name, const Options& opts, Verbosity verbosity) {
  if (opts.print_defaults) {
    std::cout << rr_experiment_default_config(kind);
    return 0;
  }
  if (opts.config.empty()) {
    std::cerr << "relrep " << name << ": --config is required (see --print-defaults)\n";
    return 2;
  }
  const std::string out_dir = opts.out.empty() ? "out/" + name : opts.out;
  const std::uint64_t seed = opts.seed.value_or(0);
  rr_manifest* manifest = nullptr;
  const rr_status status =
      rr_experiment_run(kind, opts.config.c_str(), out_dir.c_str(), opts.seed ? &seed : nullptr, &manifest);
  if (manifest) {
    if (verbosity == Verbosity::debug) {
      std::cout << rr_manifest_json(manifest);
    } else if (verbosity == Verbosity::info) {
      for (std::size_t i = 0; i < rr_manifest_summary_count(manifest); ++i) {
        std::cout << rr_manifest_summary_line(manifest, i) << "\n";
      }
      std::cout << "artifacts written to " << out_dir << "\n";
    }
    rr_manifest_destroy(manifest);
  }
  if (status != RR_OK) {
    std::cerr << "relrep " << name << ": " << rr_status_name(status) << ": " << rr_last_error() << "\n";
  }
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative reparameterization experiments for Gaussian mixtures and small networks"};
  app.set_version_flag("--version", rr_version());
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    rr_experiment_kind kind;
    const char* help;
  };
  const Sub subs[] = {
      {"field", RR_EXP_FIELD, "averaged learning-dynamics flow fields in both parameterizations"},
      {"gd", RR_EXP_GD, "gradient-descent trajectories in both parameterizations"},
      {"ecm", RR_EXP_ECM, "standard EM against relative ECM on sampled data"},
      {"fim", RR_EXP_FIM, "Fisher information: direct relative vs transformed, residual report"},
      {"nn", RR_EXP_NN, "network singularity detection and row reparameterization"},
  };
  Options opts;
  for (const auto& sub : subs) {
    auto* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", opts.config, "experiment config file (key = value)");
    cmd->add_option("--out", opts.out, "output directory (default out/<experiment>)");
    cmd->add_option_function<std::uint64_t>(
           "--seed", [&](const std::uint64_t& value) { opts.seed = value; }, "override the config seed");
    cmd->add_flag("--print-defaults", opts.print_defaults, "print every key with its default and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const Verbosity verbosity = verbosity_from_env();
  for (const auto& sub : subs) {
    if (app.got_subcommand(sub.name)) return run(sub.kind, sub.name, opts, verbosity);
  }
  return 2;
}
