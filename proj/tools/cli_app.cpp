#include "cli_app.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qglat/dn_maps.hpp"
#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/reconstruct.hpp"

namespace qglat::cli {

namespace {

using nlohmann::json;

EdgeId parse_edge(const json& spec) {
  if (!spec.is_array() || spec.size() != 3 || !spec[0].is_number_integer() ||
      !spec[1].is_number_integer() || !spec[2].is_string())
    throw SchemaError("edge must be [n1, n2, \"right\"|\"up\"]");
  const std::string dir = spec[2].get<std::string>();
  if (dir != "right" && dir != "up")
    throw SchemaError("edge direction must be \"right\" or \"up\"");
  return EdgeId{{spec[0].get<int>(), spec[1].get<int>()},
                dir == "right" ? EdgeDir::Right : EdgeDir::Up};
}

SymmetricPotential parse_potential(const json& coeffs) {
  if (!coeffs.is_array() || coeffs.empty())
    throw SchemaError("potential coeffs must be a non-empty array");
  const double c0 = coeffs[0].get<double>();
  if (coeffs.size() == 1) return SymmetricPotential::constant(c0);
  Eigen::VectorXd c(coeffs.size() - 1);
  for (std::size_t i = 1; i < coeffs.size(); ++i) c[i - 1] = coeffs[i].get<double>();
  return SymmetricPotential::from_cosine(c0, c);
}

std::string edge_json_label(EdgeId e) {
  return "[" + std::to_string(e.origin.n1) + "," + std::to_string(e.origin.n2) +
         (e.dir == EdgeDir::Right ? ",right]" : ",up]");
}

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

ReconOptions recon_options(const ExperimentConfig& config) {
  ReconOptions opts;
  opts.basis_dim = config.basis_dim;
  opts.grid_size = config.grid_size;
  opts.q_bound = config.q_bound;
  if (config.lambda_window) {
    opts.lambda_lo = config.lambda_window->first;
    opts.lambda_hi = config.lambda_window->second;
  }
  opts.workers = config.workers;
  opts.min_retained = config.min_retained;
  opts.tau_root = config.tau_root;
  opts.tau_root_file = config.tau_root_file;
  opts.fit.tau_fit = config.tau_fit;
  opts.fit.m_cap = config.m_cap;
  opts.fit.max_iterations = config.max_iterations;
  if (!config.out.empty()) opts.state_dump_path = config.out + ".frontier.json";
  return opts;
}

std::pair<double, double> forward_window(const ExperimentConfig& config) {
  if (config.lambda_window) return *config.lambda_window;
  constexpr double pi = 3.141592653589793;
  return {0.3, std::pow((config.basis_dim + 4) * pi, 2) + config.q_bound};
}

double coeff_of(const SymmetricPotential& q, int i) {
  if (i == 0) return q.constant_term();
  return i <= q.cos_coeffs().size() ? q.cos_coeffs()[i - 1] : 0.0;
}

double coeff_l2(const SymmetricPotential& a, const SymmetricPotential& b) {
  const int d =
      static_cast<int>(std::max(a.cos_coeffs().size(), b.cos_coeffs().size()));
  double acc = std::pow(coeff_of(a, 0) - coeff_of(b, 0), 2);
  for (int i = 1; i <= d; ++i)
    acc += 0.5 * std::pow(coeff_of(a, i) - coeff_of(b, i), 2);
  return std::sqrt(acc);
}

json potential_coeffs_json(const SymmetricPotential& q, int basis_dim) {
  json out = json::array();
  for (int i = 0; i <= basis_dim; ++i) out.push_back(coeff_of(q, i));
  return out;
}

// Roundtrip comparison table; pass criterion per edge is
// ||q_rec - q|| <= max(rel * ||q||, abs).
json compare_tables(const Region& region, const PotentialTable& planted,
                    const ReconResult& result, const ExperimentConfig& config,
                    bool& all_pass) {
  json rows = json::array();
  all_pass = true;
  for (int i = 0; i < region.edge_count(); ++i) {
    const EdgeId e = region.edge_at(i);
    if (!region.is_interior_edge(e)) continue;
    json row;
    row["edge"] = {e.origin.n1, e.origin.n2,
                   e.dir == EdgeDir::Right ? "right" : "up"};
    const SymmetricPotential& truth = planted.at(i);
    row["planted"] = potential_coeffs_json(truth, config.basis_dim);
    if (!result.potentials[i]) {
      row["recovered"] = nullptr;
      row["pass"] = false;
      all_pass = false;
      rows.push_back(row);
      continue;
    }
    const SymmetricPotential& rec = *result.potentials[i];
    const double err = coeff_l2(truth, rec);
    const double scale = truth.l2_norm();
    const bool pass =
        err <= std::max(config.roundtrip_rel * scale, config.roundtrip_abs);
    row["recovered"] = potential_coeffs_json(rec, config.basis_dim);
    row["error_l2"] = err;
    row["relative_error"] = scale > 0.0 ? err / scale : 0.0;
    row["pass"] = pass;
    all_pass = all_pass && pass;
    rows.push_back(row);
  }
  return rows;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open output path " + path);
  out << text;
  if (!out) throw SchemaError("write failed for " + path);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& err) {
    throw SchemaError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!j.is_object()) throw SchemaError("config must be a JSON object");

  ExperimentConfig config;
  config.N = j.value("N", -1);
  if (config.N < 0) throw SchemaError("config requires N >= 0");

  if (j.contains("potentials")) {
    if (!j["potentials"].is_array())
      throw SchemaError("potentials must be an array");
    for (const auto& item : j["potentials"]) {
      if (!item.contains("edge") || !item.contains("coeffs"))
        throw SchemaError("each potential entry needs edge and coeffs");
      config.potentials.emplace_back(parse_edge(item["edge"]),
                                     parse_potential(item["coeffs"]));
    }
  }
  if (j.contains("random_potentials")) {
    const auto& r = j["random_potentials"];
    config.random_potentials = true;
    config.random_basis_dim = r.value("basis_dim", 0);
    config.random_amplitude = r.value("amplitude", 1.0);
    if (config.random_basis_dim < 0 || config.random_amplitude < 0.0)
      throw SchemaError("random_potentials fields must be non-negative");
  }

  config.basis_dim = j.value("basis_dim", 0);
  if (config.basis_dim < 0) throw SchemaError("basis_dim must be >= 0");
  if (j.contains("lambda_window")) {
    const auto& w = j["lambda_window"];
    if (!w.is_array() || w.size() != 2)
      throw SchemaError("lambda_window must be [lo, hi]");
    config.lambda_window = {{w[0].get<double>(), w[1].get<double>()}};
    if (!(config.lambda_window->second > config.lambda_window->first))
      throw SchemaError("lambda_window must be increasing");
  }
  if (j.contains("lambda_list")) {
    for (const auto& v : j["lambda_list"])
      config.lambda_list.push_back(v.get<double>());
    if (config.lambda_list.empty())
      throw SchemaError("lambda_list must be non-empty when present");
  }
  config.grid_size = j.value("grid_size", 400);
  config.file_density = j.value("file_density", 200.0);
  if (config.grid_size <= 0 || config.file_density <= 0.0)
    throw SchemaError("grid_size and file_density must be positive");
  config.oracle_mode = j.value("oracle_mode", "callable");
  if (config.oracle_mode != "callable" && config.oracle_mode != "file")
    throw SchemaError("oracle_mode must be callable or file");
  config.payload = j.value("payload", "binary");
  if (config.payload != "binary" && config.payload != "csv")
    throw SchemaError("payload must be binary or csv");
  config.dn_file = j.value("dn_file", "");
  config.out = j.value("out", "");
  config.workers = j.value("workers", 0);
  config.seed = j.value("seed", 1u);

  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    if (s.contains("edge")) config.spectrum.edge = parse_edge(s["edge"]);
    config.spectrum.count = s.value("count", 8);
    if (config.spectrum.count < 1)
      throw SchemaError("spectrum.count must be >= 1");
    if (s.contains("weyl")) {
      const auto& w = s["weyl"];
      if (w.contains("window")) {
        config.spectrum.weyl_lo = w["window"][0].get<double>();
        config.spectrum.weyl_hi = w["window"][1].get<double>();
      }
      config.spectrum.weyl_count = w.value("count", 12);
    }
  }

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    config.q_bound = t.value("q_bound", config.q_bound);
    config.tau_root = t.value("tau_root", config.tau_root);
    config.tau_root_file = t.value("tau_root_file", config.tau_root_file);
    config.tau_fit = t.value("tau_fit", config.tau_fit);
    config.m_cap = t.value("m_cap", config.m_cap);
    config.max_iterations = t.value("max_iterations", config.max_iterations);
    config.min_retained = t.value("min_retained", config.min_retained);
    config.pole_moat = t.value("pole_moat", config.pole_moat);
    config.rcond_floor = t.value("rcond_floor", config.rcond_floor);
    config.roundtrip_rel = t.value("roundtrip_rel", config.roundtrip_rel);
    config.roundtrip_abs = t.value("roundtrip_abs", config.roundtrip_abs);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::pair<Region, PotentialTable> build_problem(const ExperimentConfig& config) {
  Region region = build_region(config.N);
  PotentialTable table(region);
  std::vector<bool> assigned(region.edge_count(), false);
  for (const auto& [edge, q] : config.potentials) {
    if (!region.edge_in_region(edge))
      throw SchemaError("potential references " + edge_json_label(edge) +
                        " outside E_Omega");
    if (!region.is_interior_edge(edge))
      throw SchemaError("potential references boundary edge " +
                        edge_json_label(edge) +
                        "; boundary potentials are fixed to zero");
    const int idx = region.edge_index(edge);
    if (assigned[idx])
      throw SchemaError("duplicate potential for " + edge_json_label(edge));
    assigned[idx] = true;
    table.set(region, edge, q);
  }
  if (config.random_potentials) {
    std::mt19937 rng(config.seed);
    std::uniform_real_distribution<double> coeff(-config.random_amplitude,
                                                 config.random_amplitude);
    for (int i = 0; i < region.edge_count(); ++i) {
      if (assigned[i] || !region.is_interior_edge(region.edge_at(i))) continue;
      const double c0 = coeff(rng);
      if (config.random_basis_dim == 0) {
        table.set(region, region.edge_at(i), SymmetricPotential::constant(c0));
      } else {
        Eigen::VectorXd c(config.random_basis_dim);
        for (int m = 0; m < config.random_basis_dim; ++m) c[m] = coeff(rng);
        table.set(region, region.edge_at(i),
                  SymmetricPotential::from_cosine(c0, c));
      }
    }
  }
  return {std::move(region), std::move(table)};
}

int run_forward(const ExperimentConfig& config) {
  if (config.out.empty()) throw SchemaError("forward requires an output path");
  auto [region, table] = build_problem(config);

  DNSampleFile file;
  if (!config.lambda_list.empty()) {
    file = sample_edge_dn_list(region, table, config.lambda_list,
                               config.payload, config.workers);
  } else {
    const auto [lo, hi] = forward_window(config);
    DNGridOptions opts;
    opts.per_unit_density = config.file_density;
    opts.pole_moat = config.pole_moat;
    opts.rcond_floor = config.rcond_floor;
    opts.workers = config.workers;
    opts.payload = config.payload;
    file = sample_edge_dn_grid(region, table, lo, hi, opts);
  }
  write_dn_file(config.out, file);
  std::cout << "forward: wrote " << file.lambdas.size() << " samples ("
            << file.dropped.size() << " dropped) to " << config.out << "\n";
  for (const auto& [lam, reason] : file.dropped)
    std::cout << "  dropped lambda " << format_g17(lam) << ": " << reason
              << "\n";
  return kExitOk;
}

int run_reconstruct(const ExperimentConfig& config, const std::string& dn_path) {
  if (dn_path.empty())
    throw SchemaError("reconstruct requires a D-N sample file path");
  if (config.out.empty())
    throw SchemaError("reconstruct requires an output path");
  const DNSampleFile file = read_dn_file(dn_path);
  const Region region = build_region(file.N);
  const SampledOracle oracle(std::move(file));
  const ReconResult result =
      reconstruct_all(region, oracle, recon_options(config));
  write_text(config.out, report_to_json(result.report) + "\n");
  std::cout << "reconstruct: recovered " << result.report.edges.size()
            << " edges; report at " << config.out << "\n";
  return kExitOk;
}

int run_roundtrip(const ExperimentConfig& config) {
  if (config.out.empty()) throw SchemaError("roundtrip requires an output path");
  auto [region, table] = build_problem(config);
  const ForwardOracle callable(region, table);

  ReconResult result;
  std::string dn_path;
  if (config.oracle_mode == "file") {
    dn_path = config.out + ".dn";
    const auto [lo, hi] = forward_window(config);
    DNGridOptions gopts;
    gopts.per_unit_density = config.file_density;
    gopts.pole_moat = config.pole_moat;
    gopts.rcond_floor = config.rcond_floor;
    gopts.workers = config.workers;
    gopts.payload = config.payload;
    write_dn_file(dn_path, sample_edge_dn_grid(region, table, lo, hi, gopts));
    const SampledOracle oracle(read_dn_file(dn_path));
    result = reconstruct_all(region, oracle, recon_options(config));
  } else {
    result = reconstruct_all(region, callable, recon_options(config));
  }

  bool all_pass = false;
  json report = json::parse(report_to_json(result.report));
  report["comparison"] = compare_tables(region, table, result, config, all_pass);
  report["all_pass"] = all_pass;
  if (!dn_path.empty()) report["dn_file"] = dn_path;
  write_text(config.out, report.dump(2) + "\n");

  std::cout << "roundtrip (" << config.oracle_mode << "): "
            << (all_pass ? "PASS" : "FAIL") << "; report at " << config.out
            << "\n";
  return all_pass ? kExitOk : kExitTolerance;
}

int run_spectrum(const ExperimentConfig& config) {
  if (config.out.empty()) throw SchemaError("spectrum requires an output path");
  if (!config.spectrum.edge)
    throw SchemaError("spectrum requires spectrum.edge in the config");
  auto [region, table] = build_problem(config);
  const EdgeId edge = *config.spectrum.edge;
  if (!region.edge_in_region(edge))
    throw SchemaError("spectrum edge " + edge_json_label(edge) +
                      " outside E_Omega");
  const SymmetricPotential& q = table.at(region.edge_index(edge));

  const std::vector<double> eigs =
      dirichlet_eigenvalues(q, config.spectrum.count);
  std::ostringstream csv;
  csv << "kind,index,lambda,value\n";
  for (std::size_t n = 0; n < eigs.size(); ++n)
    csv << "eigenvalue," << (n + 1) << ',' << format_g17(eigs[n]) << ",\n";

  const Shooter shooter(q);
  int written = 0;
  for (int i = 0; i < config.spectrum.weyl_count; ++i) {
    const double lam =
        config.spectrum.weyl_lo +
        (config.spectrum.weyl_hi - config.spectrum.weyl_lo) *
            (config.spectrum.weyl_count == 1
                 ? 0.0
                 : static_cast<double>(i) / (config.spectrum.weyl_count - 1));
    const EdgeCharData d = shooter.at(lam);
    if (std::abs(d.S1) < kEpsDen) continue;  // skip near-pole sample
    csv << "weyl," << written++ << ',' << format_g17(lam) << ','
        << format_g17(d.dS1 / d.S1) << "\n";
  }
  write_text(config.out, csv.str());
  std::cout << "spectrum: " << eigs.size() << " eigenvalues and " << written
            << " weyl samples at " << config.out << "\n";
  return kExitOk;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const SchemaError& err) {
    std::cerr << "error (schema): " << err.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error (input): " << err.what() << "\n";
    return kExitSchema;
  } catch (const NumericalError& err) {
    std::cerr << "error (numerical): " << err.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace qglat::cli
