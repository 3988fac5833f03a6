#include "hypocoerce/certificate.hpp"
#include "hypocoerce/evolution.hpp"
#include "hypocoerce/io.hpp"
#include "hypocoerce/phase_assembly.hpp"
#include "hypocoerce/run.hpp"
#include "hypocoerce/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>

namespace hypo {

namespace {

class Suite {
public:
  explicit Suite(std::ostream& log) : log_(log) {}
  void check(const std::string& name, bool pass, double value) {
    checks_.push_back({name, pass, value});
    log_ << (pass ? "PASS " : "FAIL ") << name << " " << format_real(value) << "\n";
  }
  std::vector<InvariantCheck> take() { return std::move(checks_); }

private:
  std::ostream& log_;
  std::vector<InvariantCheck> checks_;
};

double dense_max(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

void ladder_checks(Suite& s, Index nv, double gamma) {
  const std::string tag = "[nv=" + std::to_string(nv) + ",gamma=" + format_real(gamma) + "]";
  const LadderSet ls = build_ladder(nv, gamma);
  double bentry = 0.0;
  for (Index k = 1; k < nv; ++k) bentry = std::max(bentry, std::abs(ls.B(k - 1, k) - std::sqrt(gamma * k)));
  s.check("ladder.B_entries" + tag, bentry <= 1e-14 * gamma * nv, bentry);
  s.check("ladder.Bdag_is_transpose" + tag, (ls.Bdag - ls.B.transpose()).cwiseAbs().maxCoeff() == 0.0, 0.0);
  const double nerr = dense_max(ls.Bdag * ls.B - ls.Nop);
  s.check("ladder.Nop_equals_BdagB" + tag, nerr <= 1e-13 * gamma * nv, nerr);
  const Mat comm = ls.B * ls.Bdag - ls.Bdag * ls.B;
  Mat target = gamma * Mat::Identity(nv, nv);
  target(nv - 1, nv - 1) = -gamma * (nv - 1);
  s.check("ladder.ccr_with_truncation_row" + tag, dense_max(comm - target) <= 1e-12, dense_max(comm - target));
  const Mat id_minus = Mat::Identity(nv, nv) - ls.Pi1v;
  s.check("ladder.CdagC_equals_I_minus_Pi1" + tag, dense_max(ls.Cdag * ls.C - id_minus) <= 1e-14,
          dense_max(ls.Cdag * ls.C - id_minus));
  s.check("ladder.Pi1_projector" + tag, dense_max(ls.Pi1v * ls.Pi1v - ls.Pi1v) == 0.0, 0.0);
  s.check("ladder.B_e0_zero" + tag, ls.B.col(0).cwiseAbs().maxCoeff() == 0.0, 0.0);
  bool pattern = true;
  for (Index i = 0; i < nv; ++i)
    for (Index j = 0; j < nv; ++j)
      pattern = pattern && ((ls.B(i, j) != 0.0) == (ls.C(i, j) != 0.0)) && (ls.C(i, j) == 0.0 || ls.C(i, j) == 1.0);
  s.check("ladder.C_pattern_matches_B" + tag, pattern, 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(ls.Nop);
  double serr = 0.0;
  for (Index k = 0; k < nv; ++k) serr = std::max(serr, std::abs(es.eigenvalues()(k) - gamma * k));
  s.check("ladder.Nop_spectrum" + tag, serr <= 1e-12 * gamma * nv, serr);
}

void spatial_checks(Suite& s, const Potential& p, const std::string& ptag, double gamma, Scheme scheme) {
  const std::string tag = "[" + ptag + ",gamma=" + format_real(gamma) + "," + std::string(to_string(scheme)) + "]";
  const SpatialOps sp = build_spatial_ops(make_grid(8.0, 64), p, gamma, scheme);
  s.check("spatial.Adag_is_transpose" + tag, max_abs(SparseMatrix(sp.Adag - SparseMatrix(sp.A.transpose()))) == 0.0, 0.0);
  const Mat W(sp.W);
  s.check("spatial.W_symmetric" + tag, dense_max(W - W.transpose()) == 0.0, dense_max(W - W.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> es(W);
  const double wmin = es.eigenvalues()(0);
  s.check("spatial.W_psd" + tag, wmin >= -1e-12, wmin);
  if (scheme == Scheme::mimetic) {
    const double ap = (sp.A * sp.phi0).cwiseAbs().maxCoeff();
    s.check("spatial.A_phi0_zero" + tag, ap <= 1e-12, ap);
  }
  const Vec lo = witten_lowest(sp, 2);
  const double rel = std::max(std::abs(lo(1) - es.eigenvalues()(1)) / es.eigenvalues()(1),
                              std::abs(lo(0) - es.eigenvalues()(0)));
  s.check("spatial.iterative_matches_dense" + tag, rel <= 1e-8, rel);

  // Commutator consistency ratio under exact h halving (nx = 65, 129).
  auto defect = [&](Index nx) {
    const SpatialOps o = build_spatial_ops(make_grid(8.0, nx), p, gamma, scheme);
    Vec u(nx);
    for (Index i = 0; i < nx; ++i) {
      const double x = o.grid.nodes(i);
      u(i) = (1.0 + x + 0.3 * x * x) * std::exp(-0.25 * x * x);
    }
    return spatial_commutator_defect(o, u, 4.0);
  };
  const double ratio = defect(129) / defect(257);
  const bool ok = scheme == Scheme::mimetic ? (ratio >= 1.7 && ratio <= 2.3) : (ratio >= 3.5 && ratio <= 4.5);
  s.check("spatial.commutator_order" + tag, ok, ratio);
}

void phase_checks(Suite& s, const PhaseSystem& sys, const std::string& tag) {
  const Index n = sys.K.n();
  const Index nx = sys.sp.grid.nx;
  const Index nv = sys.ls.nv;
  const double g = sys.ls.gamma;
  const Mat x0 = sys.X0.materialize();
  s.check("phase.X0_antisymmetric" + tag, dense_max(x0 + x0.transpose()) == 0.0, dense_max(x0 + x0.transpose()));
  const Mat k = sys.K.materialize();
  const Mat pi1 = sys.Pi1.materialize();
  const Mat q = Mat::Identity(n, n) - pi1;
  const double symerr = dense_max(0.5 * (k + k.transpose()) - g * q);
  s.check("phase.symK" + tag, symerr <= 1e-12, symerr);
  const Mat l2 = sys.Lambda2.materialize();
  Eigen::SelfAdjointEigenSolver<Mat> es(l2, Eigen::EigenvaluesOnly);
  s.check("phase.Lambda2_ge_I" + tag, es.eigenvalues()(0) >= 1.0 - 1e-12, es.eigenvalues()(0));
  s.check("phase.Lambda2_symmetric" + tag, dense_max(l2 - l2.transpose()) == 0.0, 0.0);
  const Mat pi0 = sys.Pi0.materialize();
  s.check("phase.Pi1_projector" + tag, dense_max(pi1 * pi1 - pi1) <= 1e-12 && dense_max(pi1 - pi1.transpose()) <= 1e-12,
          dense_max(pi1 * pi1 - pi1));
  s.check("phase.Pi0_projector" + tag, dense_max(pi0 * pi0 - pi0) <= 1e-12 && dense_max(pi0 - pi0.transpose()) <= 1e-12,
          dense_max(pi0 * pi0 - pi0));
  s.check("phase.Pi0_m0" + tag, (pi0 * sys.m0 - sys.m0).cwiseAbs().maxCoeff() <= 1e-12,
          (pi0 * sys.m0 - sys.m0).cwiseAbs().maxCoeff());
  const Mat cc = Mat(lift_velocity(sys.ls.Cdag * sys.ls.C, nx));
  s.check("phase.CdagC_lift" + tag, dense_max(cc - q) == 0.0, dense_max(cc - q));

  // ‖aΛ⁻¹‖, ‖bΛ⁻¹‖ <= 1 with Λ⁻¹ from the dense eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Mat> ev(l2);
  const Mat linv = ev.eigenvectors() * ev.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   ev.eigenvectors().transpose();
  const Mat a = Mat(lift_position(sys.sp.A, nv)) * linv;
  const Mat b = Mat(lift_velocity(sys.ls.B, nx)) * linv;
  const double na = operator_norm([&](const Vec& u) { return Vec(a * u); },
                                  [&](const Vec& u) { return Vec(a.transpose() * u); }, n, 1e-10)
                        .value;
  const double nb = operator_norm([&](const Vec& u) { return Vec(b * u); },
                                  [&](const Vec& u) { return Vec(b.transpose() * u); }, n, 1e-10)
                        .value;
  s.check("phase.a_Lambda_inv_le_1" + tag, na <= 1.0 + 1e-8, na);
  s.check("phase.b_Lambda_inv_le_1" + tag, nb <= 1.0 + 1e-8, nb);

  const Mat wl = Mat(lift_position(sys.sp.W, nv));
  const Mat nl = Mat(lift_velocity(sys.ls.Nop, nx));
  const double c1 = dense_max(l2 * wl - wl * l2), c2 = dense_max(l2 * nl - nl * l2), c3 = dense_max(l2 * pi1 - pi1 * l2);
  s.check("phase.Lambda2_commutes" + tag, std::max({c1, c2, c3}) <= 1e-12, std::max({c1, c2, c3}));
  double slice = 0.0;
  const Mat w(sys.sp.W);
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < nx; ++j)
      slice = std::max(slice, std::abs(l2(i * nv, j * nv) - (i == j ? 1.0 : 0.0) - w(i, j)));
  s.check("phase.Lambda2_mode0_is_I_plus_W" + tag, slice <= 1e-12, slice);
  const CommutatorReport cr = commutator_residuals(sys.sp, sys.ls, sys.potential);
  s.check("phase.commutator_ccr_b" + tag, cr.ccr_b <= 1e-12, cr.ccr_b);
  s.check("phase.commutator_lambda2_b" + tag, cr.lambda2_b <= 1e-12, cr.lambda2_b);
  s.check("phase.commutator_b_X0" + tag, cr.b_X0 <= 1e-12, cr.b_X0);
  s.check("phase.L_kills_mode0_slice" + tag, sys.L.apply(sys.m0).cwiseAbs().maxCoeff() <= 1e-14,
          sys.L.apply(sys.m0).cwiseAbs().maxCoeff());
  s.check("phase.Aop_kills_m0" + tag, sys.Aop.apply(sys.m0).cwiseAbs().maxCoeff() <= 1e-14,
          sys.Aop.apply(sys.m0).cwiseAbs().maxCoeff());
}

void spectral_certificate_checks(Suite& s, const PhaseSystem& sys, const std::string& tag) {
  const double g = sys.ls.gamma;
  const SpectralReport sr = spectral_gaps(sys.Lambda2, sys.sp, sys.ls);
  s.check("spectral.alpha_min_tau_gamma" + tag, sr.sumset_mismatch <= 1e-10, sr.sumset_mismatch);
  s.check("spectral.tau_ge_alpha" + tag, sr.tau >= sr.alpha - 1e-10, sr.tau - sr.alpha);
  s.check("spectral.alpha_le_gamma" + tag, sr.alpha <= g + 1e-10, sr.alpha - g);
  const KSpectrum ks = spectrum_K(sys.K, sys.m0);
  s.check("spectral.K_min_real" + tag, ks.min_real >= -1e-10, ks.min_real);
  s.check("spectral.K_single_zero" + tag, ks.near_zero == 1, ks.near_zero);

  const NormEstimate nl = operator_norm(sys.L);
  const NormEstimate na = operator_norm(sys.Aop);
  const Vec m0 = sys.m0;
  auto restrict = [&](const Vec& u) { return Vec(u - m0.dot(u) * m0); };
  const NormEstimate nlr = operator_norm([&](const Vec& u) { return sys.L.apply(restrict(u)); },
                                         [&](const Vec& u) { return restrict(sys.L.apply_transpose(u)); },
                                         sys.K.n(), 1e-9);
  s.check("spectral.norm_monotone_under_restriction" + tag, nlr.value <= nl.value + 1e-9, nlr.value - nl.value);

  const DerivativeBounds db = derivative_bounds(sys.potential);
  const NormBounds nb = analytic_norm_bounds(g, db.m2, db.m3);
  s.check("certificate.boundL_dominates" + tag, nb.boundL >= nl.value, nb.boundL - nl.value);
  s.check("certificate.boundA_dominates" + tag, nb.boundA >= na.value, nb.boundA - na.value);
  Certificate c = make_certificate(sr.alpha, sr.tau, g, nl.value, na.value, nb, false);
  s.check("certificate.epsilon_le_gamma_over_8" + tag, c.epsilon <= g / 8.0, c.epsilon);
  s.check("certificate.epsilon_normL_le_1" + tag, c.epsilon * c.normL_num <= 1.0, c.epsilon * c.normL_num);
  s.check("certificate.delta_positive" + tag, c.delta > 0.0, c.delta);
  const double margin = mode_one_margin(sys, sr.alpha);
  s.check("certificate.mode_one" + tag, margin >= -1e-10, margin);
  const double t1 = sr.tau / (1 + sr.tau), t2 = sr.alpha / (1 + sr.alpha), t3 = sr.alpha / (1 + g);
  s.check("certificate.gap_chain" + tag, t1 >= t2 - 1e-14 && t2 >= t3 - 1e-14, std::min(t1 - t2, t2 - t3));
  const CoercivityForm form(sys.K, sys.L, sys.Pi0);
  const double l0 = form.lambda_min(0.0).lambda_min;
  s.check("certificate.eps0_not_coercive" + tag, std::abs(l0) <= 1e-10, l0);
  const double lc = form.lambda_min(c.epsilon).lambda_min;
  s.check("certificate.coercive_at_certified_eps" + tag, lc >= 0.9 * c.delta, lc / c.delta);
}

void evolution_checks(Suite& s, const PhaseSystem& sys, const std::string& tag) {
  auto ent = [&](const Vec& u) { return relative_entropy(u, sys.sp, sys.ls); };
  const EntropyResult h0 = ent(sys.m0);
  s.check("evolution.entropy_steady_zero" + tag, std::abs(h0.value) <= 1e-10, h0.value);

  InitParams ip;
  const State s0 = make_initial(InitKind::shifted_maxwellian, ip, sys.sp, sys.ls);
  s.check("evolution.initial_mass_one" + tag, std::abs(s0.mass - 1.0) <= 1e-12, s0.mass - 1.0);
  EvolveOptions eo;
  eo.dt = 0.02;
  eo.T = 20.0;
  eo.delta = 0.01;
  const DecayTrace tr = evolve(sys.K, sys.m0, s0, eo, ent);
  double drift = 0.0, env = -1e300, hmin = 1e300, eq26 = -1e300, dmono = -1e300;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const TraceRow& r = tr.rows[i];
    drift = std::max(drift, std::abs(r.mass - 1.0));
    env = std::max(env, r.dev - r.envelope);
    hmin = std::min(hmin, r.entropy);
    eq26 = std::max(eq26, r.entropy - r.norm_u * r.dev);
    if (i > 0) dmono = std::max(dmono, r.dev - tr.rows[i - 1].dev);
  }
  s.check("evolution.mass_conserved" + tag, drift <= 1e-12, drift);
  s.check("evolution.dev_nonincreasing" + tag, dmono <= 1e-12, dmono);
  s.check("evolution.contraction" + tag, tr.max_step_growth <= 1e-10, tr.max_step_growth);
  s.check("evolution.envelope" + tag, env <= 0.0, env);
  s.check("evolution.entropy_nonnegative" + tag, hmin >= -1e-10, hmin);
  s.check("evolution.entropy_eq26" + tag, eq26 <= 1e-8, eq26);
}

}  // namespace

std::vector<InvariantCheck> run_selftest(std::ostream& log) {
  Suite s(log);
  for (Index nv : {2, 8, 32})
    for (double g : {0.25, 1.0, 4.0}) ladder_checks(s, nv, g);

  const Potential h1 = Potential::make(PotentialKind::harmonic, 1.0);
  const Potential hc = Potential::make(PotentialKind::harmonic_cosine, 1.0, 0.5, 2.0);
  spatial_checks(s, h1, "harmonic(1)", 1.0, Scheme::mimetic);
  spatial_checks(s, h1, "harmonic(1)", 1.0, Scheme::centered);
  spatial_checks(s, hc, "harmonic_cosine(1,0.5,2)", 1.0, Scheme::mimetic);

  struct Case {
    Potential p;
    std::string name;
    double gamma;
  };
  for (const Case& c : {Case{h1, "harmonic(1)", 1.0}, Case{hc, "harmonic_cosine(1,0.5,2)", 0.25},
                        Case{hc, "harmonic_cosine(1,0.5,2)", 4.0}}) {
    const std::string tag = "[" + c.name + ",gamma=" + format_real(c.gamma) + ",32x8]";
    const PhaseSystem sys = build_phase_system(c.p, c.gamma, 8.0, 32, 8);
    phase_checks(s, sys, tag);
    spectral_certificate_checks(s, sys, tag);
    if (c.gamma == 1.0) evolution_checks(s, sys, tag);
  }
  return s.take();
}

}  // namespace hypo
