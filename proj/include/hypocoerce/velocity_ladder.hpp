#pragma once

#include "hypocoerce/types.hpp"

namespace hypo {

/// Truncated Hermite-basis velocity operators.
///
/// Basis functions are the normalized Hermite functions H_k, k < nv, with
/// H_0 the square root of the velocity Maxwellian. B is the annihilation
/// operator b = γ^{1/2}(∂_v + v/2): B(k-1, k) = √γ·√k. C is its flat
/// counterpart with unit entries, so that Cdag·C = Id - Pi1v holds exactly.
/// [B, Bdag] equals γ·Id on modes 0..nv-2; the last diagonal entry is
/// -γ(nv-1) and is kept as is.
struct LadderSet {
  Index nv = 0;
  double gamma = 0.0;
  Mat B;
  Mat Bdag;
  Mat C;
  Mat Cdag;
  Mat Nop;
  Mat Pi1v;
};

LadderSet build_ladder(Index nv, double gamma);

/// γ^{-1/2}(B + Bdag): truncated multiplication by v.
Mat velocity_multiplication(const LadderSet& ls);

/// γ^{-1/2}(B - Bdag)/2: truncated ∂_v.
Mat velocity_derivative(const LadderSet& ls);

}  // namespace hypo
