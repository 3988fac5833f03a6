#pragma once

#include "hypocoerce/phase_assembly.hpp"
#include "hypocoerce/types.hpp"

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

namespace hypo {

struct SpectralReport {
  double tau = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double lambda0 = 0.0;
  double spec_abscissa_K = std::numeric_limits<double>::quiet_NaN();
  double lambda2_bottom = 0.0;  ///< smallest eigenvalue of Λ² - Id
  double sumset_mismatch = 0.0; ///< |alpha - min(tau, gamma)|
};

/// alpha from the two lowest eigenvalues of Λ² (shift-invert Lanczos on
/// the full phase operator, Rayleigh quotients ‖a·v‖² + ‖b·v‖²); tau from
/// the Witten operator alone. The two routes are compared, not merged.
SpectralReport spectral_gaps(const PhaseOperator& L2, const SpatialOps& sp, const LadderSet& ls);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  ///< top of the spectrum clustered; Krylov finish used
};

/// Power iteration on opᵀ∘op from a seeded random start. When the residual
/// has not dropped below tol after `power_steps` iterations (a cluster at
/// the top of the singular spectrum), the current iterate seeds a Lanczos
/// finish on opᵀ∘op and `degenerate` is set.
NormEstimate operator_norm(const LinearMap& op, const LinearMap& op_t, Index n, double tol = 1e-9,
                           int max_iter = 20000, std::uint64_t seed = 42, int power_steps = 400);
NormEstimate operator_norm(const PhaseOperator& op, double tol = 1e-9, int max_iter = 20000,
                           std::uint64_t seed = 42);

struct KSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  double min_real = 0.0;
  int near_zero = 0;          ///< eigenvalues with |λ| <= 1e-8
  double zero_eigenvalue = 0.0;  ///< the one closest to 0
  double spec_abscissa = 0.0; ///< smallest real part among the others
  double kernel_alignment = std::numeric_limits<double>::quiet_NaN();  ///< |(v, m0)| for the zero eigenvector
};

/// Dense nonsymmetric eigensolve; n <= kDenseCap. Throws NumericalError if
/// some eigenvalue has real part below -1e-10.
KSpectrum spectrum_K(const PhaseOperator& K, const Vec& m0 = Vec());

}  // namespace hypo
