#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "cli_app.hpp"
#include "qglat/errors.hpp"

namespace {

// Flag > environment variable > config field.
void apply_env(std::string& value, const char* name) {
  if (!value.empty()) return;
  if (const char* env = std::getenv(name)) value = env;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward and inverse Dirichlet-to-Neumann computations for "
               "Schrodinger operators on square-lattice quantum graphs"};
  app.require_subcommand(1);

  std::string config_path, out_path, dn_path;
  int workers = -1;
  long long seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config (JSON)");
    cmd->add_option("--out", out_path, "Output path");
    cmd->add_option("--workers", workers, "Worker pool size (0 = all cores)");
    cmd->add_option("--seed", seed,
                    "Seed for randomized test-potential generation");
  };

  CLI::App* forward =
      app.add_subcommand("forward", "Compute and write a D-N sample file");
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Recover edge potentials from a D-N sample file");
  reconstruct->add_option("dnfile", dn_path, "D-N sample file");
  CLI::App* roundtrip = app.add_subcommand(
      "roundtrip", "Forward + reconstruct + comparison in one run");
  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "Eigenvalue / Weyl-function table for one edge");
  for (CLI::App* cmd : {forward, reconstruct, roundtrip, spectrum})
    add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  apply_env(config_path, "QGLAT_CONFIG");
  apply_env(out_path, "QGLAT_OUT");
  if (workers < 0) {
    if (const char* env = std::getenv("QGLAT_WORKERS")) workers = std::atoi(env);
  }
  if (seed < 0) {
    if (const char* env = std::getenv("QGLAT_SEED")) seed = std::atoll(env);
  }

  try {
    if (config_path.empty())
      throw qglat::SchemaError("a config is required (--config or QGLAT_CONFIG)");
    qglat::cli::ExperimentConfig config = qglat::cli::load_config(config_path);
    if (!out_path.empty()) config.out = out_path;
    if (workers >= 0) config.workers = workers;
    if (seed >= 0) config.seed = static_cast<unsigned>(seed);

    if (*forward) return qglat::cli::run_forward(config);
    if (*reconstruct) {
      if (dn_path.empty()) dn_path = config.dn_file;
      return qglat::cli::run_reconstruct(config, dn_path);
    }
    if (*roundtrip) return qglat::cli::run_roundtrip(config);
    if (*spectrum) return qglat::cli::run_spectrum(config);
    throw qglat::SchemaError("no subcommand selected");
  } catch (...) {
    return qglat::cli::exit_code_for_current_exception();
  }
}
