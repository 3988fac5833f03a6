#pragma once

#include "hypocoerce/potential.hpp"
#include "hypocoerce/types.hpp"

#include <string_view>

namespace hypo {

struct SpatialGrid {
  double R = 0.0;
  Index nx = 0;
  double h = 0.0;
  Vec nodes;
};

/// Uniform grid x_i = -R + i·h on [-R, R], h = 2R/(nx-1).
SpatialGrid make_grid(double R, Index nx);

enum class Scheme { mimetic, centered };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

/// Discrete a = γ^{1/2}(∂_x + V'/2), its transpose, the Witten Laplacian
/// W = AᵀA and the discrete ground state.
struct SpatialOps {
  SpatialGrid grid;
  Scheme scheme = Scheme::mimetic;
  double gamma = 1.0;
  SparseMatrix A;
  SparseMatrix Adag;
  SparseMatrix W;
  Vec phi0;    ///< unit norm, positive sum
  double lambda0 = 0.0;
  Vec hess;    ///< V''(x_i)
  Vec dV;      ///< V'(x_i)
};

/// Mimetic rows i < nx-1: (A·u)_i = √γ(r_i·u_{i+1} - u_i/r_i)/h with
/// r_i = e^{(V_{i+1} - V_i)/4}, last row zero, so A annihilates e^{-V/2}
/// exactly. Centered: A = √γ(D_c + diag(V'/2)) with Dirichlet closure.
SpatialOps build_spatial_ops(const SpatialGrid& grid, const Potential& p, double gamma,
                             Scheme scheme = Scheme::mimetic);

struct GroundState {
  double lambda0 = 0.0;
  Vec phi0;
};

/// Smallest eigenpair of W (shift-invert Lanczos, Rayleigh quotient taken
/// as ‖A·v‖²).
GroundState discrete_ground_state(const SpatialOps& ops);

/// Second-smallest minus smallest eigenvalue of W.
double witten_gap(const SpatialOps& ops);

/// Two smallest eigenvalues of W, ascending.
Vec witten_lowest(const SpatialOps& ops, int k = 2);

/// ‖mask·([A, Aᵀ] - γ·diag(V''))·u‖ / ‖u‖ where mask keeps nodes with
/// |x| <= interior_radius. Discrete form of [a, a*] = γ·V''.
double spatial_commutator_defect(const SpatialOps& ops, const Vec& u, double interior_radius);

}  // namespace hypo
