#pragma once

#include "hypocoerce/phase_assembly.hpp"
#include "hypocoerce/types.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace hypo {

enum class InitKind { shifted_maxwellian, mode_perturbation, random };
enum class Integrator { crank_nicolson, backward_euler, dense_expm };

std::string_view to_string(InitKind k);
InitKind init_kind_from_string(std::string_view name);
std::string_view to_string(Integrator k);
Integrator integrator_from_string(std::string_view name);

struct InitParams {
  double x0 = 1.0;     ///< shifted_maxwellian: spatial centre
  double v0 = 0.5;     ///< shifted_maxwellian: velocity shift
  double sigma = 1.0;  ///< shifted_maxwellian: spatial width
  double eta = 0.1;    ///< mode_perturbation / random amplitude
  int mode = 1;        ///< mode_perturbation: velocity mode of the dipole x·φ0
  std::uint64_t seed = 42;
};

struct State {
  Vec u;
  double t = 0.0;
  double mass = 1.0;  ///< (u, m0)
};

/// Initial data rescaled so that (u0, m0) = 1.
///  shifted_maxwellian: f0 ∝ e^{-(x-x0)²/(2σ²)}·e^{-(v-v0)²/2}, velocity
///    coefficients by Gauss–Hermite projection.
///  mode_perturbation: m0 + η·p/‖p‖ with p = (x·φ0)⊗e_mode made ⊥ m0.
///  random: m0 + η·g/‖g‖, g seeded Gaussian.
State make_initial(InitKind kind, const InitParams& params, const SpatialOps& sp, const LadderSet& ls);

struct EntropyResult {
  double value = 0.0;
  double clipped_fraction = 0.0;
  bool flagged = false;  ///< clipped fraction > 1e-6
};

/// H(f|M) = Σ_i φ0_i Σ_q ω_q S_iq ln(S_iq/φ0_i), S_iq = Σ_k u_ik p_k(v_q),
/// S clipped below at 1e-14. Grid weights cancel because φ0 and u share the
/// same discrete normalization with (u, m0) = 1. quad_order 0 means 2·nv.
EntropyResult relative_entropy(const Vec& u, const SpatialOps& sp, const LadderSet& ls, int quad_order = 0);

struct TraceRow {
  double t = 0.0;
  double dev = 0.0;
  double entropy = 0.0;
  double envelope = 0.0;
  double mass = 0.0;
  double norm_u = 0.0;
  double clipped = 0.0;
};

struct DecayTrace {
  std::vector<TraceRow> rows;
  Vec u_final;
  bool entropy_valid = false;
  int steps = 0;
  double max_step_growth = 0.0;  ///< max over steps of (dev_{n+1} - rounding slack)/dev_n - 1
};

using EntropyFn = std::function<EntropyResult(const Vec&)>;

struct EvolveOptions {
  double dt = 0.01;
  double T = 40.0;
  Integrator scheme = Integrator::crank_nicolson;
  double record_every = 0.0;  ///< 0: max(dt, T/2000)
  double delta = 0.0;         ///< envelope rate parameters; envelope is NaN if delta <= 0
  double C_L = 1.0;
};

/// Integrates ∂_t u + K u = 0. dev is ‖u - (u, m0)m0‖; contraction is
/// checked every step and a violation throws NumericalError.
DecayTrace evolve(const PhaseOperator& K, const Vec& m0, const State& s0, const EvolveOptions& opts,
                  const EntropyFn& entropy = {});

struct DecayFit {
  double rate = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  int points = 0;
};

/// Least-squares slope of ln(dev) over rows with dev/dev(0) in [1e-6, 1e-1].
DecayFit fit_decay_rate(const DecayTrace& trace);

/// Coefficients of e^{-(v-v0)²/2}/μ^{1/2} in the normalized Hermite
/// functions: c_k = Σ_q ω_q p_k(v_q + v0).
Vec shifted_maxwellian_coefficients(Index nv, double v0);

}  // namespace hypo
