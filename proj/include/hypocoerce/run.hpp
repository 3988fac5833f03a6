#pragma once

#include "hypocoerce/certificate.hpp"
#include "hypocoerce/io.hpp"
#include "hypocoerce/spectral.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypo {

enum class Stage { gap, certify, evolve };

struct InvariantCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
};

struct RunReport {
  std::filesystem::path out_dir;
  std::optional<SpectralReport> spectral;
  std::optional<Certificate> certificate;
  std::optional<Certificate> certificate_analytic;
  std::filesystem::path trace_path;
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<InvariantCheck> invariant_suite;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::string failed_stage;  ///< empty when every stage ran
  std::string failure;
  bool validation_error = false;

  bool all_pass() const;
  /// 0 ok, 1 stage crash, 2 validation, 3 failed inequality/invariant.
  int exit_code() const;
  nlohmann::json to_json() const;
};

/// Runs the pipeline up to `stage`, writing certificate.json,
/// certificate_analytic.json, trace.csv and report.json into a fresh
/// directory under `out` (or the config's outputs.dir). report.json is
/// written even when a stage fails.
RunReport run(const RunConfig& cfg, Stage stage, const std::filesystem::path& out, std::ostream& log);
RunReport run(const std::filesystem::path& config_path, Stage stage, const std::filesystem::path& out,
              std::ostream& log);

/// One `evolve` run per point of gamma × beta × nx; summary.csv with
/// "gamma,beta,nx,alpha,delta,fitted_rate". Returns the worst exit code.
int run_sweep(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Invariant suite on small fixed configurations. Prints one line per
/// check and returns the checks.
std::vector<InvariantCheck> run_selftest(std::ostream& log);

/// Worker count for sweeps: HYPOCOERCE_THREADS if set, else hardware.
unsigned sweep_worker_count(int configured);

}  // namespace hypo
