#include "hypocoerce/certificate.hpp"

#include "hypocoerce/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hypo {

NormBounds analytic_norm_bounds(double gamma, double M2, double M3) {
  if (!(gamma > 0.0)) throw ValidationError("gamma", "must be > 0");
  if (!(M2 >= 0.0)) throw ValidationError("M2", "must be >= 0");
  if (!(M3 >= 0.0)) throw ValidationError("M3", "must be >= 0");
  NormBounds nb;
  nb.boundL = std::sqrt(1.0 + gamma * (M2 + 2.0));
  const double b1 = (M2 + 1.0 + std::sqrt(gamma) * M3) * (std::sqrt(gamma * (M2 + 2.0)) + 1.0) * nb.boundL;
  const double b2 = (M2 + 1.0) * nb.boundL * nb.boundL;
  const double b3 = M2;
  nb.boundA = b1 + b2 + b3;
  return nb;
}

EpsilonChoice choose_epsilon(double alpha, double gamma, double normL, double normA) {
  if (!(alpha > 0.0)) throw ValidationError("alpha", "no spectral gap (alpha <= 0): no certificate");
  if (!(gamma > 0.0)) throw ValidationError("gamma", "must be > 0");
  if (!(normL > 0.0)) throw ValidationError("normL", "must be > 0");
  if (!(normA >= 0.0)) throw ValidationError("normA", "must be >= 0");
  EpsilonChoice e;
  e.C = normA * normA / gamma + gamma * normL * normL;
  e.epsilon = std::min({gamma / 8.0, 1.0 / normL, alpha / (2.0 * (1.0 + gamma) * e.C)});
  e.delta = e.epsilon * alpha / (1.0 + gamma) - e.epsilon * e.epsilon * e.C;
  e.A_const = alpha * alpha / e.delta;
  return e;
}

CoercivityForm::CoercivityForm(const PhaseOperator& K, const PhaseOperator& L, const PhaseOperator& Pi0,
                               bool matrix_free)
    : K_(K), L_(L) {
  if (K.n() != L.n() || K.n() != Pi0.n()) throw ValidationError("n", "operator dimensions differ");
  m0_ = Pi0.apply(Vec::Ones(K.n()));
  if (m0_.norm() == 0.0) throw ValidationError("Pi0", "projector annihilates the ones vector");
  m0_.normalize();
  dense_ = !matrix_free && K.n() <= kDenseCap;
  if (dense_) {
    const Mat k = K.materialize();
    const Mat l = L.materialize();
    const Mat sl = l + l.transpose();
    S0_ = 0.5 * (k + k.transpose());
    Mat t = sl * k;
    S1_ = 0.5 * (t + t.transpose());
  }
}

namespace {

// Mask of the resolved subspace (interior nodes, modes < nv-1).
Vec subspace_mask(Index nx, Index nv, CoercivitySubspace sub) {
  Vec mask = Vec::Ones(nx * nv);
  if (sub == CoercivitySubspace::full) return mask;
  for (Index i = 0; i < nx; ++i)
    for (Index k = 0; k < nv; ++k)
      if (i == 0 || i == nx - 1 || k == nv - 1) mask(i * nv + k) = 0.0;
  return mask;
}

}  // namespace

CoercivityResult CoercivityForm::lambda_min(double epsilon, CoercivitySubspace sub) const {
  const Index n = K_.n();
  const Vec mask = subspace_mask(K_.nx(), K_.nv(), sub);
  Vec q = mask.cwiseProduct(m0_);
  q.normalize();
  // P projects onto {u : u = mask·u, u ⊥ q}; everything else gets the shift.
  auto project = [&](const Vec& u) {
    Vec v = mask.cwiseProduct(u);
    v -= q.dot(v) * q;
    return v;
  };

  CoercivityResult res;
  if (dense_) {
    Mat s = S0_ + epsilon * S1_;
    // P·S·P with P = D - q·qᵀ, D = diag(mask).
    s = mask.asDiagonal() * s * mask.asDiagonal();
    const Vec sq = s * q;
    const double qsq = q.dot(sq);
    s -= sq * q.transpose() + q * sq.transpose();
    s += qsq * q * q.transpose();
    const double mu = 1.0 + s.cwiseAbs().rowwise().sum().maxCoeff();
    s += mu * q * q.transpose();
    for (Index i = 0; i < n; ++i)
      if (mask(i) == 0.0) s(i, i) += mu;
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("dense coercivity eigensolve failed");
    res.lambda_min = es.eigenvalues()(0);
    res.dense = true;
    return res;
  }

  // Matrix-free: S·u = ½(M·K·u + Kᵀ·M·u), M·u = u + ε(L·u + Lᵀ·u).
  auto apply_m = [&](const Vec& u) { return Vec(u + epsilon * (L_.apply(u) + L_.apply_transpose(u))); };
  auto apply_s = [&](const Vec& u) { return Vec(0.5 * (apply_m(K_.apply(u)) + K_.apply_transpose(apply_m(u)))); };
  const double lnorm = operator_norm(L_, 1e-4, 50).value;
  const SparseMatrix& km = K_.matrix();
  double kbound = 0.0;
  {
    const Vec rows = Mat(km.cwiseAbs() * Vec::Ones(n)).col(0);
    const Vec cols = Mat(SparseMatrix(km.transpose()).cwiseAbs() * Vec::Ones(n)).col(0);
    kbound = std::max(rows.maxCoeff(), cols.maxCoeff());
  }
  const double mu = 1.0 + 2.0 * (1.0 + 2.0 * std::abs(epsilon) * lnorm) * kbound;
  auto op = [&](const Vec& u) {
    const Vec pu = project(u);
    Vec out = project(apply_s(pu));
    out += mu * (u - pu);
    return out;
  };
  LanczosOptions opts;
  opts.max_iter = 3000;
  opts.tol = 1e-10;
  opts.check_every = 10;
  RitzPairs rp = lanczos(op, n, 1, Extremity::smallest, opts);
  res.lambda_min = rp.values(0);
  res.dense = false;
  res.iterations = rp.iterations;
  res.converged = rp.converged;
  if (!rp.converged)
    throw NumericalError("matrix-free coercivity eigensolve did not converge (residual " +
                         std::to_string(rp.max_residual) + ")");
  return res;
}

CoercivityResult verify_coercivity(const PhaseOperator& K, const PhaseOperator& L, double epsilon,
                                   const PhaseOperator& Pi0, CoercivitySubspace sub) {
  return CoercivityForm(K, L, Pi0).lambda_min(epsilon, sub);
}

double decay_envelope(double delta, double C_L, double norm_u0, double t) {
  if (!(delta > 0.0)) throw ValidationError("delta", "must be > 0");
  if (!(C_L >= 1.0)) throw ValidationError("C_L", "must be >= 1");
  if (!(t >= 0.0)) throw ValidationError("t", "must be >= 0");
  return 3.0 * norm_u0 * std::exp(-delta * t / (3.0 * C_L));
}

Certificate make_certificate(double alpha, double tau, double gamma, double normL_num, double normA_num,
                             const NormBounds& bounds, bool analytic) {
  Certificate c;
  c.alpha = alpha;
  c.tau = tau;
  c.gamma = gamma;
  c.normL_num = normL_num;
  c.normA_num = normA_num;
  c.boundL = bounds.boundL;
  c.boundA = bounds.boundA;
  const EpsilonChoice e = analytic ? choose_epsilon(alpha, gamma, bounds.boundL, bounds.boundA)
                                   : choose_epsilon(alpha, gamma, normL_num, normA_num);
  c.epsilon = e.epsilon;
  c.C = e.C;
  c.delta = e.delta;
  c.A_const = e.A_const;
  c.prefactor = 3.0;
  c.decay_rate = c.delta / (3.0 * certificate_CL(c, analytic));
  return c;
}

double certificate_CL(const Certificate& c, bool analytic) {
  return std::max(1.0, c.epsilon * (analytic ? c.boundL : c.normL_num));
}

double mode_one_margin(const PhaseSystem& sys, double alpha, int samples, std::uint64_t seed) {
  const Index n = sys.K.n();
  const SparseMatrix wl = lift_position(sys.sp.W, sys.ls.nv);
  const double c = alpha / (1.0 + sys.ls.gamma);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec u = random_gaussian(n, seed + static_cast<std::uint64_t>(s));
    u -= sys.m0.dot(u) / sys.m0.squaredNorm() * sys.m0;
    const Vec p = sys.Pi1.apply(u);
    const Vec y = apply_inverse_lambda2(sys.Lambda2, wl * p, sys.rtol);
    const double lhs = y.dot(p);
    worst = std::min(worst, (lhs - c * p.squaredNorm()) / p.squaredNorm());
  }
  return worst;
}

}  // namespace hypo
