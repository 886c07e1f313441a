#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qglat/lattice.hpp"
#include "qglat/potential.hpp"
#include "qglat/vertex_system.hpp"

namespace qglat::cli {

// Exit codes, stable for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 2;
inline constexpr int kExitSchema = 3;
inline constexpr int kExitNumerical = 4;

struct SpectrumRequest {
  std::optional<EdgeId> edge;
  int count = 8;
  double weyl_lo = 0.5;
  double weyl_hi = 30.0;
  int weyl_count = 12;
};

struct ExperimentConfig {
  int N = 0;
  std::vector<std::pair<EdgeId, SymmetricPotential>> potentials;
  bool random_potentials = false;
  int random_basis_dim = 0;
  double random_amplitude = 1.0;

  int basis_dim = 0;
  std::optional<std::pair<double, double>> lambda_window;
  std::vector<double> lambda_list;  // forward only: explicit grid
  int grid_size = 400;
  double file_density = 200.0;
  std::string oracle_mode = "callable";  // callable | file
  std::string payload = "binary";        // forward file payload
  std::string dn_file;                   // reconstruct input
  std::string out;
  int workers = 0;
  unsigned seed = 1;

  SpectrumRequest spectrum;

  // Tolerance overrides (library defaults documented in the README).
  double q_bound = 10.0;
  double tau_root = 1e-10;
  double tau_root_file = 1e-4;
  double tau_fit = 1e-10;
  double m_cap = 1e3;
  int max_iterations = 50;
  int min_retained = 50;
  double pole_moat = 0.06;
  double rcond_floor = 1e-4;
  double roundtrip_rel = 1e-3;
  double roundtrip_abs = 1e-4;
};

// Throws SchemaError on malformed or inconsistent input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Region plus the planted potential table (explicit entries, then seeded
// random fills on the remaining interior edges when requested).
std::pair<Region, PotentialTable> build_problem(const ExperimentConfig& config);

int run_forward(const ExperimentConfig& config);
int run_reconstruct(const ExperimentConfig& config, const std::string& dn_path);
int run_roundtrip(const ExperimentConfig& config);
int run_spectrum(const ExperimentConfig& config);

// Maps an exception escaping a command to the exit-code contract.
int exit_code_for_current_exception();

}  // namespace qglat::cli
