#include "hypocoerce/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hypo {

SpectralReport spectral_gaps(const PhaseOperator& L2, const SpatialOps& sp, const LadderSet& ls) {
  if (L2.role() != OperatorRole::Lambda2 || !L2.solver())
    throw ValidationError("L2", "expected an assembled Lambda2 operator");
  if (L2.nx() != sp.grid.nx || L2.nv() != ls.nv) throw ValidationError("L2", "dimension mismatch");

  SpectralReport rep;
  rep.gamma = ls.gamma;
  const Vec w = witten_lowest(sp, 2);
  rep.lambda0 = w(0);
  rep.tau = w(1) - w(0);

  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  const auto solver = L2.solver();
  LanczosOptions opts;
  opts.tol = 1e-13;
  RitzPairs rp = lanczos([&](const Vec& x) { return solver->apply_inverse(x); }, L2.n(), 2, Extremity::largest, opts);
  Mat vecs;
  if (rp.converged) {
    vecs = rp.vectors;
  } else if (L2.n() <= kDenseCap) {
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(L2.matrix())};
    vecs = es.eigenvectors().leftCols(2);
  } else {
    throw NumericalError("Lambda2 eigensolve did not converge (residual " + std::to_string(rp.max_residual) + ")");
  }

  // Λ² - Id = (A⊗I)ᵀ(A⊗I) + (I⊗B)ᵀ(I⊗B): Gram form of the Rayleigh quotient.
  const SparseMatrix a = lift_position(sp.A, nv);
  const SparseMatrix b = lift_velocity(ls.B, nx);
  double lo[2];
  for (int i = 0; i < 2; ++i) {
    const Vec v = vecs.col(i).normalized();
    lo[i] = (a * v).squaredNorm() + (b * v).squaredNorm();
  }
  if (lo[0] > lo[1]) std::swap(lo[0], lo[1]);
  rep.lambda2_bottom = lo[0];
  rep.alpha = lo[1] - lo[0];
  rep.sumset_mismatch = std::abs(rep.alpha - std::min(rep.tau, rep.gamma));
  return rep;
}

NormEstimate operator_norm(const LinearMap& op, const LinearMap& op_t, Index n, double tol, int max_iter,
                           std::uint64_t seed, int power_steps) {
  if (!(tol > 0.0 && tol <= 1e-4)) throw ValidationError("tol", "must lie in (0, 1e-4]");
  if (n < 1) throw ValidationError("n", "must be >= 1");
  NormEstimate est;
  Vec x = random_unit_vector(n, seed);
  const int phase1 = std::min(max_iter, power_steps);
  for (int it = 1; it <= phase1; ++it) {
    const Vec ax = op(x);
    const double s2 = ax.squaredNorm();
    est.iterations = it;
    est.value = std::sqrt(s2);
    if (s2 == 0.0) {
      // x in the kernel: retry from another direction, or accept a zero map.
      if (it > 8) {
        est.converged = true;
        return est;
      }
      x = random_unit_vector(n, seed + static_cast<std::uint64_t>(it));
      continue;
    }
    const Vec y = op_t(ax);
    if ((y - s2 * x).norm() / s2 <= tol) {
      est.converged = true;
      return est;
    }
    x = y / y.norm();
  }
  if (est.iterations >= max_iter) return est;

  est.degenerate = true;
  LanczosOptions lo;
  lo.max_iter = std::max(1, max_iter - est.iterations);
  lo.tol = tol;
  lo.seed = seed;
  lo.start = x;
  const RitzPairs rp = lanczos([&](const Vec& u) { return Vec(op_t(op(u))); }, n, 1, Extremity::largest, lo);
  est.iterations += rp.iterations;
  // Rayleigh quotient of the Ritz vector through the factor: ‖op·v‖².
  const double s2 = op(rp.vectors.col(0)).squaredNorm();
  est.value = std::sqrt(std::max(s2, rp.values(0)));
  est.converged = rp.converged;
  return est;
}

NormEstimate operator_norm(const PhaseOperator& op, double tol, int max_iter, std::uint64_t seed) {
  return operator_norm([&](const Vec& u) { return op.apply(u); },
                       [&](const Vec& u) { return op.apply_transpose(u); }, op.n(), tol, max_iter, seed);
}

KSpectrum spectrum_K(const PhaseOperator& K, const Vec& m0) {
  if (K.n() > kDenseCap) throw ValidationError("n", "dense spectrum refused above " + std::to_string(kDenseCap));
  const Mat k = K.materialize();
  const bool vectors = m0.size() == K.n() && K.n() <= 1024;
  Eigen::EigenSolver<Mat> es(k, vectors);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve of K failed");
  KSpectrum out;
  const auto& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  Index zi = 0;
  out.min_real = ev(0).real();
  for (Index i = 0; i < ev.size(); ++i) {
    out.min_real = std::min(out.min_real, ev(i).real());
    if (std::abs(ev(i)) <= 1e-8) ++out.near_zero;
    if (std::abs(ev(i)) < std::abs(ev(zi))) zi = i;
  }
  out.zero_eigenvalue = std::abs(ev(zi));
  out.spec_abscissa = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < ev.size(); ++i)
    if (i != zi) out.spec_abscissa = std::min(out.spec_abscissa, ev(i).real());
  if (vectors) {
    const Eigen::VectorXcd v = es.eigenvectors().col(zi);
    out.kernel_alignment = std::abs(v.dot(m0.cast<std::complex<double>>())) / v.norm() / m0.norm();
  }
  if (out.min_real < -1e-10)
    throw NumericalError("K has an eigenvalue with real part " + std::to_string(out.min_real) + " < -1e-10");
  return out;
}

}  // namespace hypo
