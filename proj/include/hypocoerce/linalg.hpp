#pragma once

#include "hypocoerce/types.hpp"

#include <Eigen/SparseCholesky>

#include <cstdint>
#include <vector>

namespace hypo {

enum class Extremity { smallest, largest };

struct LanczosOptions {
  int max_iter = 2000;
  double tol = 1e-11;  ///< residual bound relative to the spectral scale
  std::uint64_t seed = 42;
  int check_every = 4;
  Vec start;  ///< starting vector; seeded random when empty
};

struct RitzPairs {
  Vec values;    ///< ordered from the requested end inward
  Mat vectors;   ///< unit columns matching `values`
  int iterations = 0;
  bool converged = false;
  double max_residual = 0.0;
};

/// Symmetric Lanczos with full reorthogonalization for the k extreme
/// eigenpairs of a symmetric linear map. Restarts with a fresh random
/// direction when the Krylov space becomes invariant, which recovers
/// repeated eigenvalues.
RitzPairs lanczos(const LinearMap& op, Index n, int k, Extremity which,
                  const LanczosOptions& opts = {});

/// Sparse LDLT factorization of an SPD matrix with residual-checked solves.
class SpdSolver {
public:
  explicit SpdSolver(SparseMatrix m);
  SpdSolver(const SpdSolver&) = delete;
  SpdSolver& operator=(const SpdSolver&) = delete;

  /// Returns y with ‖m·y - rhs‖ <= rtol·‖rhs‖, refining up to three times.
  Vec solve(const Vec& rhs, double rtol) const;
  Mat solve(const Mat& rhs) const;
  /// One refinement step, no residual check (for use inside eigensolvers).
  Vec apply_inverse(const Vec& rhs) const;
  const SparseMatrix& matrix() const { return m_; }

private:
  SparseMatrix m_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

/// kron(P, Q)[(i·q + k), (j·q + l)] = P(i,j)·Q(k,l): x-major phase ordering.
SparseMatrix kron(const SparseMatrix& p, const SparseMatrix& q);
SparseMatrix sparse_identity(Index n);
SparseMatrix sparse_diagonal(const Vec& d);

Vec random_unit_vector(Index n, std::uint64_t seed);
Vec random_gaussian(Index n, std::uint64_t seed);

struct GaussHermite {
  Vec nodes;
  Vec weights;  ///< normalized so that they sum to 1 (weight e^{-v²/2}/√(2π))
};

/// Probabilists' Gauss–Hermite rule with q nodes (Golub–Welsch).
GaussHermite gauss_hermite(int q);

/// Orthonormal probabilists' Hermite polynomials p_0..p_{nmax-1} at x;
/// result(k, j) = p_k(x_j).
Mat hermite_polynomials(Index nmax, const Vec& x);

double max_abs(const SparseMatrix& m);

}  // namespace hypo
