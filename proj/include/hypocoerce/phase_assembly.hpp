#pragma once

#include "hypocoerce/linalg.hpp"
#include "hypocoerce/potential.hpp"
#include "hypocoerce/spatial_ops.hpp"
#include "hypocoerce/types.hpp"
#include "hypocoerce/velocity_ladder.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace hypo {

enum class OperatorRole { X0, K, Lambda2, Pi1, Pi0, L, Aop, custom };

std::string_view to_string(OperatorRole r);

/// Linear operator on the phase grid, index i·nv + k (x-major).
///
/// Either backed by a sparse matrix or given as an apply/apply-transpose
/// pair (L and 𝒜 involve Λ⁻², which is dense). Copies share the backing
/// data, which is immutable.
class PhaseOperator {
public:
  static PhaseOperator from_sparse(OperatorRole role, SparseMatrix m, Index nx, Index nv);
  static PhaseOperator from_maps(OperatorRole role, Index nx, Index nv, LinearMap apply,
                                 LinearMap apply_transpose);

  OperatorRole role() const { return role_; }
  Index n() const { return nx_ * nv_; }
  Index nx() const { return nx_; }
  Index nv() const { return nv_; }
  bool is_sparse() const { return static_cast<bool>(sparse_); }
  const SparseMatrix& matrix() const;

  Vec apply(const Vec& u) const;
  Vec apply_transpose(const Vec& u) const;

  /// Dense matrix; refused for n > kDenseCap.
  Mat materialize() const;
  Mat materialize_transpose() const;

  /// Factorization of a Lambda2 operator (null for other roles).
  std::shared_ptr<const SpdSolver> solver() const { return solver_; }
  void attach_solver(std::shared_ptr<const SpdSolver> s) { solver_ = std::move(s); }

private:
  OperatorRole role_ = OperatorRole::custom;
  Index nx_ = 0;
  Index nv_ = 0;
  std::shared_ptr<const SparseMatrix> sparse_;
  LinearMap apply_;
  LinearMap apply_t_;
  std::shared_ptr<const SpdSolver> solver_;
};

/// a ⊗-lifted to phase space: A acting in position, identity in velocity.
SparseMatrix lift_position(const SparseMatrix& p, Index nv);
/// Identity in position, q acting in velocity.
SparseMatrix lift_velocity(const Mat& q, Index nx);

/// X0 = γ⁻¹(A⊗Bᵀ - Aᵀ⊗B).
PhaseOperator assemble_transport(const SpatialOps& sp, const LadderSet& ls);
/// v∂_x - V'∂_v discretized directly (centered D, truncated v and ∂_v).
PhaseOperator assemble_transport_direct(const SpatialOps& sp, const LadderSet& ls);
/// K = X0 + γ(Id - Id⊗Π₁ᵥ).
PhaseOperator assemble_K(const PhaseOperator& X0, const LadderSet& ls);
/// Λ² = Id + W⊗Id + Id⊗N, with its sparse LDLT factor attached.
PhaseOperator assemble_lambda2(const SpatialOps& sp, const LadderSet& ls);
/// y with ‖Λ²y - u‖ <= rtol·‖u‖.
Vec apply_inverse_lambda2(const PhaseOperator& L2, const Vec& u, double rtol);
/// L = Λ⁻²(Aᵀ⊗B).
PhaseOperator assemble_L(const SpatialOps& sp, const LadderSet& ls, const PhaseOperator& L2,
                         double rtol = 1e-10);
/// 𝒜 = Λ⁻²b*(H-Id)aL + Λ⁻²a*(H-Id)bL - Λ⁻²b*Hb, H = diag(V''(x_i))⊗Id.
PhaseOperator assemble_A_operator(const SpatialOps& sp, const LadderSet& ls, const PhaseOperator& L2,
                                  const Potential& p, double rtol = 1e-10);
PhaseOperator projector_pi1(const SpatialOps& sp, const LadderSet& ls);
PhaseOperator projector_pi0(const SpatialOps& sp, const LadderSet& ls);

/// m0 = φ0 ⊗ e0.
Vec maxwellian_vector(const SpatialOps& sp, const LadderSet& ls);

/// Residuals of the discrete commutation relations. Entries marked exact
/// are max-abs matrix residuals on rows with velocity mode < nv-1; the
/// others are ‖r‖/‖u‖ on a smooth test vector restricted to |x| <= R/2 and
/// modes < nv-1.
struct CommutatorReport {
  double ccr_b = 0.0;        ///< [b, b*] - γ            (exact)
  double lambda2_b = 0.0;    ///< [Λ², b] + γb           (exact)
  double b_X0 = 0.0;         ///< [b, X0] - a            (exact)
  double b_number_shift = 0.0;       ///< b*(b*b) - (b*b)b* + γb* (exact)
  double a_X0 = 0.0;         ///< [a, X0] + V''b
  double lambda2_X0 = 0.0;   ///< [Λ², X0] + b*(H-1)a + a*(H-1)b
  double a_witten_shift = 0.0;       ///< a*(a*a) - (a*a)a* + γa*H, diagnostic only
};

CommutatorReport commutator_residuals(const SpatialOps& sp, const LadderSet& ls, const Potential& p);

/// Smooth test vector (1 + x + 0.3x²)e^{-x²/4} ⊗ c, c_k = 1/(k+1).
Vec smooth_test_vector(const SpatialOps& sp, const LadderSet& ls);

/// Everything assembled for one configuration.
struct PhaseSystem {
  Potential potential;
  SpatialOps sp;
  LadderSet ls;
  double rtol = 1e-10;
  Vec m0;
  PhaseOperator X0, K, Lambda2, Pi1, Pi0, L, Aop;
};

PhaseSystem build_phase_system(const Potential& p, double gamma, double R, Index nx, Index nv,
                               Scheme scheme = Scheme::mimetic, double rtol = 1e-10);

/// Matrix Market coordinate format, 17 significant digits.
void write_matrix_market(const SparseMatrix& m, const std::string& path);

}  // namespace hypo
