#pragma once

#include "hypocoerce/certificate.hpp"
#include "hypocoerce/evolution.hpp"
#include "hypocoerce/potential.hpp"
#include "hypocoerce/spatial_ops.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypo {

struct RunConfig {
  PotentialKind kind = PotentialKind::harmonic;
  double lambda = 1.0;
  double beta = 0.0;
  double omega = 1.0;
  double gamma = 1.0;
  double R = 8.0;
  Index nx = 128;
  Index nv = 16;
  Scheme scheme = Scheme::mimetic;
  double rtol = 1e-10;
  int max_iter = 20000;
  std::uint64_t seed = 42;
  double dt = 0.01;
  double T = 40.0;
  Integrator evolve_scheme = Integrator::crank_nicolson;
  double record_every = 0.0;
  InitKind init_kind = InitKind::shifted_maxwellian;
  InitParams init;
  std::string out_dir = "hypocoerce_out";
  bool emit_operators = false;
  std::vector<double> sweep_gamma;
  std::vector<double> sweep_beta;
  std::vector<Index> sweep_nx;
  int sweep_workers = 0;

  Potential potential() const { return Potential::make(kind, lambda, beta, omega); }
};

/// Missing keys keep their defaults. Every field is validated against the
/// preconditions of the module it feeds; failures throw ValidationError
/// naming the dotted field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
void validate_config(const RunConfig& c);
nlohmann::json config_to_json(const RunConfig& c);

/// "%.17g"; NaN as "nan".
std::string format_real(double x);

/// Certificate as a JSON object with the struct's field names, reals with
/// 17 significant digits.
std::string certificate_json(const Certificate& c);

void write_trace_csv(const DecayTrace& trace, const std::filesystem::path& path);

/// `base` if it does not exist yet, else base + "_<UTC timestamp>" (plus a
/// counter if that exists too). Creates the directory.
std::filesystem::path fresh_output_dir(const std::filesystem::path& base);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hypo
