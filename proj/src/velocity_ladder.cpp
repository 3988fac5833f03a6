#include "hypocoerce/velocity_ladder.hpp"

#include <cmath>

namespace hypo {

LadderSet build_ladder(Index nv, double gamma) {
  if (nv < 2) throw ValidationError("nv", "need at least 2 Hermite modes (collision operator degenerate)");
  if (!(gamma > 0.0)) throw ValidationError("gamma", "must be > 0");

  LadderSet ls;
  ls.nv = nv;
  ls.gamma = gamma;
  ls.B = Mat::Zero(nv, nv);
  ls.C = Mat::Zero(nv, nv);
  const double sg = std::sqrt(gamma);
  for (Index k = 1; k < nv; ++k) {
    ls.B(k - 1, k) = sg * std::sqrt(static_cast<double>(k));
    ls.C(k - 1, k) = 1.0;
  }
  ls.Bdag = ls.B.transpose();
  ls.Cdag = ls.C.transpose();

  // Exact diagonal rather than Bdag*B, which would carry rounding from the
  // square roots.
  ls.Nop = Mat::Zero(nv, nv);
  for (Index k = 0; k < nv; ++k) ls.Nop(k, k) = gamma * static_cast<double>(k);

  ls.Pi1v = Mat::Zero(nv, nv);
  ls.Pi1v(0, 0) = 1.0;
  return ls;
}

Mat velocity_multiplication(const LadderSet& ls) {
  return (ls.B + ls.Bdag) / std::sqrt(ls.gamma);
}

Mat velocity_derivative(const LadderSet& ls) {
  return (ls.B - ls.Bdag) / (2.0 * std::sqrt(ls.gamma));
}

}  // namespace hypo
