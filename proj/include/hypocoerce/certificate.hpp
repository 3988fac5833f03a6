#pragma once

#include "hypocoerce/phase_assembly.hpp"
#include "hypocoerce/types.hpp"

#include <cstdint>
#include <memory>

namespace hypo {

struct NormBounds {
  double boundL = 0.0;
  double boundA = 0.0;
};

/// boundL = √(1 + γ(M2+2)); boundA = B1 + B2 + B3 with
/// B1 = (M2 + 1 + √γ·M3)(√(γ(M2+2)) + 1)·boundL, B2 = (M2+1)·boundL², B3 = M2.
NormBounds analytic_norm_bounds(double gamma, double M2, double M3);

struct EpsilonChoice {
  double C = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double A_const = 0.0;
};

/// C = normA²/γ + γ·normL², ε = min(γ/8, 1/normL, α/(2(1+γ)C)),
/// δ = εα/(1+γ) - ε²C, A = α²/δ.
EpsilonChoice choose_epsilon(double alpha, double gamma, double normL, double normA);

/// Which unit vectors ⊥ m0 the coercivity minimum ranges over.
///  full:     every phase vector.
///  resolved: interior nodes 1..nx-2 and velocity modes 0..nv-2, where the
///            truncated operators satisfy the commutation relations.
enum class CoercivitySubspace { resolved, full };

struct CoercivityResult {
  double lambda_min = 0.0;
  bool dense = true;
  int iterations = 0;
  bool converged = true;
};

/// The form S(ε) = Sym(K) + ε·Sym((L + Lᵀ)K), i.e. ½(MᵀK + KᵀM) with
/// M = Id + ε(L + Lᵀ), restricted to a subspace ⊥ m0. Dense for n <= kDenseCap
/// (S0, S1 are formed once and reused across ε), matrix-free Lanczos above.
class CoercivityForm {
public:
  CoercivityForm(const PhaseOperator& K, const PhaseOperator& L, const PhaseOperator& Pi0,
                 bool matrix_free = false);

  CoercivityResult lambda_min(double epsilon, CoercivitySubspace sub = CoercivitySubspace::resolved) const;
  bool dense() const { return dense_; }

private:
  PhaseOperator K_;
  PhaseOperator L_;
  Vec m0_;
  bool dense_ = true;
  Mat S0_;
  Mat S1_;
};

CoercivityResult verify_coercivity(const PhaseOperator& K, const PhaseOperator& L, double epsilon,
                                   const PhaseOperator& Pi0,
                                   CoercivitySubspace sub = CoercivitySubspace::resolved);

/// 3·norm_u0·e^{-δt/(3·C_L)}.
double decay_envelope(double delta, double C_L, double norm_u0, double t);

struct Certificate {
  double alpha = 0.0;
  double tau = 0.0;
  double gamma = 0.0;
  double normL_num = 0.0;
  double normA_num = 0.0;
  double boundL = 0.0;
  double boundA = 0.0;
  double epsilon = 0.0;
  double C = 0.0;
  double delta = 0.0;
  double A_const = 0.0;
  double prefactor = 3.0;
  double decay_rate = 0.0;
  double lambda_min_verified = 0.0;
  bool verified = false;
};

/// Fills the ε/δ chain from measured norms (analytic = false) or from the
/// analytic bounds (analytic = true). lambda_min_verified and verified are
/// left for the caller.
Certificate make_certificate(double alpha, double tau, double gamma, double normL_num, double normA_num,
                             const NormBounds& bounds, bool analytic);

/// C_L = max(1, ε·‖L‖) for the norm the certificate was built from.
double certificate_CL(const Certificate& c, bool analytic);

/// min over `samples` random u ⊥ m0 of
///   (Λ⁻²(W⊗Id)Π₁u, Π₁u) - α/(1+γ)·‖Π₁u‖², relative to ‖Π₁u‖².
double mode_one_margin(const PhaseSystem& sys, double alpha, int samples = 20, std::uint64_t seed = 42);

}  // namespace hypo
