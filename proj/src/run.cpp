#include "hypocoerce/run.hpp"

#include "hypocoerce/evolution.hpp"
#include "hypocoerce/phase_assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace hypo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json finite_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

json certificate_to_json(const Certificate& c) {
  return json{{"alpha", c.alpha},
              {"tau", c.tau},
              {"gamma", c.gamma},
              {"normL_num", c.normL_num},
              {"normA_num", c.normA_num},
              {"boundL", c.boundL},
              {"boundA", c.boundA},
              {"epsilon", c.epsilon},
              {"C", c.C},
              {"delta", c.delta},
              {"A_const", c.A_const},
              {"prefactor", c.prefactor},
              {"decay_rate", c.decay_rate},
              {"lambda_min_verified", c.lambda_min_verified},
              {"verified", c.verified}};
}

}  // namespace

bool RunReport::all_pass() const {
  return std::all_of(invariant_suite.begin(), invariant_suite.end(), [](const InvariantCheck& c) { return c.pass; });
}

int RunReport::exit_code() const {
  if (validation_error) return 2;
  if (!failed_stage.empty()) return 1;
  if (!all_pass()) return 3;
  if (certificate && !certificate->verified) return 3;
  return 0;
}

json RunReport::to_json() const {
  json j;
  j["out_dir"] = out_dir.string();
  if (spectral) {
    const SpectralReport& s = *spectral;
    j["spectral"] = {{"tau", s.tau},
                     {"alpha", s.alpha},
                     {"gamma", s.gamma},
                     {"lambda0", s.lambda0},
                     {"spec_abscissa_K", finite_or_null(s.spec_abscissa_K)}};
  }
  if (certificate) j["certificate"] = certificate_to_json(*certificate);
  if (certificate_analytic) j["certificate_analytic"] = certificate_to_json(*certificate_analytic);
  j["trace_path"] = trace_path.empty() ? json(nullptr) : json(trace_path.string());
  j["fitted_rate"] = finite_or_null(fitted_rate);
  json suite = json::array();
  for (const InvariantCheck& c : invariant_suite)
    suite.push_back({{"name", c.name}, {"pass", c.pass}, {"value", finite_or_null(c.value)}});
  j["invariant_suite"] = suite;
  j["diagnostics"] = diagnostics;
  j["failed_stage"] = failed_stage.empty() ? json(nullptr) : json(failed_stage);
  j["failure"] = failure.empty() ? json(nullptr) : json(failure);
  j["exit_code"] = exit_code();
  return j;
}

RunReport run(const RunConfig& cfg, Stage stage, const fs::path& out, std::ostream& log) {
  RunReport rep;
  rep.out_dir = fresh_output_dir(out.empty() ? fs::path(cfg.out_dir) : out);
  write_text(rep.out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  auto check = [&](const std::string& name, bool pass, double value) {
    rep.invariant_suite.push_back({name, pass, value});
    log << (pass ? "  ok   " : "  FAIL ") << name << " = " << format_real(value) << "\n";
  };

  std::string current = "config";
  try {
    validate_config(cfg);

    current = "assembly";
    log << "[assembly] nx=" << cfg.nx << " nv=" << cfg.nv << " gamma=" << format_real(cfg.gamma) << "\n";
    const Potential p = cfg.potential();
    const PhaseSystem sys = build_phase_system(p, cfg.gamma, cfg.R, cfg.nx, cfg.nv, cfg.scheme, cfg.rtol);
    const Index n = sys.K.n();
    const bool mimetic = cfg.scheme == Scheme::mimetic;
    rep.diagnostics["confinement_mass"] = confinement_mass(p, cfg.R, 1024);
    rep.diagnostics["confinement_tail_bound"] = confinement_tail_bound(p, cfg.R);
    if (cfg.emit_operators) {
      write_matrix_market(sys.X0.matrix(), (rep.out_dir / "X0.mtx").string());
      write_matrix_market(sys.K.matrix(), (rep.out_dir / "K.mtx").string());
      write_matrix_market(sys.Lambda2.matrix(), (rep.out_dir / "Lambda2.mtx").string());
      write_matrix_market(sys.Pi1.matrix(), (rep.out_dir / "Pi1.mtx").string());
    }
    {
      const SparseMatrix& x0 = sys.X0.matrix();
      check("X0_antisymmetric", max_abs(SparseMatrix(x0 + SparseMatrix(x0.transpose()))) <= 1e-12,
            max_abs(SparseMatrix(x0 + SparseMatrix(x0.transpose()))));
      const SparseMatrix& k = sys.K.matrix();
      SparseMatrix symk = 0.5 * (k + SparseMatrix(k.transpose()));
      SparseMatrix target = cfg.gamma * (sparse_identity(n) - sys.Pi1.matrix());
      const double sym_err = max_abs(SparseMatrix(symk - target));
      check("symK_equals_gamma_I_minus_Pi1", sym_err <= 1e-12, sym_err);
      const double km0 = (k * sys.m0).cwiseAbs().maxCoeff();
      const double ktm0 = (k.transpose() * sys.m0).cwiseAbs().maxCoeff();
      rep.diagnostics["K_m0_max"] = km0;
      rep.diagnostics["Kt_m0_max"] = ktm0;
      if (mimetic) {
        check("K_m0_zero", km0 <= 1e-12, km0);
        check("Kt_m0_zero", ktm0 <= 1e-12, ktm0);
      }
      const Vec pm = sys.Pi0.apply(sys.m0);
      check("Pi0_m0_fixed", (pm - sys.m0).cwiseAbs().maxCoeff() <= 1e-12, (pm - sys.m0).cwiseAbs().maxCoeff());
      const Vec l2m = sys.Lambda2.apply(sys.m0);
      rep.diagnostics["Lambda2_m0_residual"] = (l2m - sys.m0).cwiseAbs().maxCoeff();
    }
    {
      const CommutatorReport cr = commutator_residuals(sys.sp, sys.ls, p);
      rep.diagnostics["commutators"] = {{"ccr_b", cr.ccr_b},       {"lambda2_b", cr.lambda2_b},
                                        {"b_X0", cr.b_X0},         {"b_number_shift", cr.b_number_shift},
                                        {"a_X0", cr.a_X0},         {"lambda2_X0", cr.lambda2_X0},
                                        {"a_witten_shift", cr.a_witten_shift}};
      check("ccr_b_retained_modes", cr.ccr_b <= 1e-12, cr.ccr_b);
      check("b_X0_minus_a", cr.b_X0 <= 1e-12, cr.b_X0);
    }

    current = "spectral";
    SpectralReport sr = spectral_gaps(sys.Lambda2, sys.sp, sys.ls);
    log << "[spectral] tau=" << format_real(sr.tau) << " alpha=" << format_real(sr.alpha) << "\n";
    check("alpha_equals_min_tau_gamma", sr.sumset_mismatch <= 1e-10, sr.sumset_mismatch);
    check("tau_ge_alpha", sr.tau >= sr.alpha - 1e-10, sr.tau - sr.alpha);
    check("alpha_le_gamma", sr.alpha <= sr.gamma + 1e-10, sr.alpha - sr.gamma);
    check("lambda2_bottom_is_one", std::abs(sr.lambda2_bottom - sr.lambda0) <= 1e-10, sr.lambda2_bottom);
    if (mimetic) check("witten_lambda0_zero", sr.lambda0 <= 1e-12, sr.lambda0);
    if (n <= 1024) {
      const KSpectrum ks = spectrum_K(sys.K, sys.m0);
      sr.spec_abscissa_K = ks.spec_abscissa;
      check("K_spectrum_right_half_plane", ks.min_real >= -1e-10, ks.min_real);
      check("K_simple_zero_eigenvalue", ks.near_zero == 1, ks.near_zero);
      rep.diagnostics["K_zero_eigenvalue"] = ks.zero_eigenvalue;
      rep.diagnostics["K_kernel_alignment"] = finite_or_null(ks.kernel_alignment);
    }
    rep.spectral = sr;
    if (stage == Stage::gap) {
      write_text(rep.out_dir / "report.json", rep.to_json().dump(2) + "\n");
      return rep;
    }

    current = "norms";
    const NormEstimate nL = operator_norm(sys.L, 1e-9, cfg.max_iter, cfg.seed);
    const NormEstimate nA = operator_norm(sys.Aop, 1e-9, cfg.max_iter, cfg.seed);
    rep.diagnostics["normL_iterations"] = nL.iterations;
    rep.diagnostics["normA_iterations"] = nA.iterations;
    rep.diagnostics["normL_degenerate"] = nL.degenerate;
    rep.diagnostics["normA_degenerate"] = nA.degenerate;
    const DerivativeBounds db = derivative_bounds(p);
    const NormBounds nb = analytic_norm_bounds(cfg.gamma, db.m2, db.m3);
    log << "[norms] |L|=" << format_real(nL.value) << " |A|=" << format_real(nA.value)
        << " boundL=" << format_real(nb.boundL) << " boundA=" << format_real(nb.boundA) << "\n";
    check("normL_converged", nL.converged, nL.iterations);
    check("normA_converged", nA.converged, nA.iterations);
    check("boundL_dominates", nb.boundL >= nL.value, nb.boundL - nL.value);
    check("boundA_dominates", nb.boundA >= nA.value, nb.boundA - nA.value);

    current = "certificate";
    Certificate cert = make_certificate(sr.alpha, sr.tau, cfg.gamma, nL.value, nA.value, nb, false);
    Certificate certA = make_certificate(sr.alpha, sr.tau, cfg.gamma, nL.value, nA.value, nb, true);
    const CoercivityForm form(sys.K, sys.L, sys.Pi0);
    cert.lambda_min_verified = form.lambda_min(cert.epsilon).lambda_min;
    cert.verified = cert.lambda_min_verified >= 0.9 * cert.delta;
    certA.lambda_min_verified = form.lambda_min(certA.epsilon).lambda_min;
    certA.verified = certA.lambda_min_verified >= 0.9 * certA.delta;
    const double lam0 = form.lambda_min(0.0).lambda_min;
    log << "[certificate] eps=" << format_real(cert.epsilon) << " delta=" << format_real(cert.delta)
        << " lambda_min=" << format_real(cert.lambda_min_verified) << "\n";
    rep.diagnostics["lambda_min_eps0"] = lam0;
    rep.diagnostics["coercivity_dense"] = form.dense();
    if (form.dense()) {
      rep.diagnostics["lambda_min_full_space"] =
          form.lambda_min(cert.epsilon, CoercivitySubspace::full).lambda_min;
    }
    check("epsilon_le_gamma_over_8", cert.epsilon <= cfg.gamma / 8.0, cert.epsilon);
    check("epsilon_normL_le_1", cert.epsilon * cert.normL_num <= 1.0, cert.epsilon * cert.normL_num);
    check("delta_positive", cert.delta > 0.0, cert.delta);
    {
      const double formula = cert.epsilon * cert.alpha / (1.0 + cert.gamma) - cert.epsilon * cert.epsilon * cert.C;
      check("delta_matches_formula", std::abs(formula - cert.delta) <= 1e-14, std::abs(formula - cert.delta));
    }
    check("coercivity_eps0_not_coercive", std::abs(lam0) <= 1e-10, lam0);
    check("coercivity_certified", cert.verified, cert.lambda_min_verified / cert.delta);
    check("coercivity_certified_analytic", certA.verified, certA.lambda_min_verified / certA.delta);
    check("analytic_certificate_weaker", certA.delta <= cert.delta, certA.delta - cert.delta);
    {
      const double margin = mode_one_margin(sys, sr.alpha, 20, cfg.seed);
      check("mode_one_witten_form", margin >= -1e-10, margin);
      const double t1 = sr.tau / (1.0 + sr.tau), t2 = sr.alpha / (1.0 + sr.alpha),
                   t3 = sr.alpha / (1.0 + cfg.gamma);
      check("gap_chain_inequality", t1 >= t2 - 1e-14 && t2 >= t3 - 1e-14, std::min(t1 - t2, t2 - t3));
    }
    rep.certificate = cert;
    rep.certificate_analytic = certA;
    write_text(rep.out_dir / "certificate.json", certificate_json(cert));
    write_text(rep.out_dir / "certificate_analytic.json", certificate_json(certA));
    if (stage == Stage::certify) {
      write_text(rep.out_dir / "report.json", rep.to_json().dump(2) + "\n");
      return rep;
    }

    current = "evolve";
    const State s0 = make_initial(cfg.init_kind, cfg.init, sys.sp, sys.ls);
    EvolveOptions eo;
    eo.dt = cfg.dt;
    eo.T = cfg.T;
    eo.scheme = cfg.evolve_scheme;
    eo.record_every = cfg.record_every;
    eo.delta = cert.delta;
    eo.C_L = certificate_CL(cert, false);
    const DecayTrace tr = evolve(sys.K, sys.m0, s0, eo, [&](const Vec& u) {
      return relative_entropy(u, sys.sp, sys.ls);
    });
    rep.trace_path = rep.out_dir / "trace.csv";
    write_trace_csv(tr, rep.trace_path);
    log << "[evolve] steps=" << tr.steps << " rows=" << tr.rows.size()
        << " dev(T)/dev(0)=" << format_real(tr.rows.back().dev / std::max(tr.rows.front().dev, 1e-300)) << "\n";
    {
      double drift = 0.0, env = -std::numeric_limits<double>::infinity();
      double hmin = std::numeric_limits<double>::infinity(), eq26 = -std::numeric_limits<double>::infinity();
      double cor12 = -std::numeric_limits<double>::infinity(), clipped = 0.0;
      const double u0n = s0.u.norm();
      const double dev0 = tr.rows.front().dev;
      for (const TraceRow& r : tr.rows) {
        drift = std::max(drift, std::abs(r.mass - 1.0));
        env = std::max(env, r.dev - r.envelope);
        if (tr.entropy_valid) {
          hmin = std::min(hmin, r.entropy);
          eq26 = std::max(eq26, r.entropy - r.norm_u * r.dev);
          cor12 = std::max(cor12, r.entropy - 3.0 * u0n * dev0 * std::exp(-eo.delta * r.t / (3.0 * eo.C_L)));
          clipped = std::max(clipped, r.clipped);
        }
      }
      check("mass_conserved", !mimetic || drift <= 1e-12, drift);
      check("contraction_every_step", tr.max_step_growth <= 1e-10, tr.max_step_growth);
      check("dev_below_certified_envelope", env <= 0.0, env);
      rep.diagnostics["entropy_valid"] = tr.entropy_valid;
      if (tr.entropy_valid) {
        check("entropy_nonnegative", hmin >= -1e-10, hmin);
        check("entropy_le_norm_times_dev", eq26 <= 1e-8, eq26);
        check("entropy_below_certified_envelope", cor12 <= 1e-8, cor12);
        rep.diagnostics["entropy_max_clipped_fraction"] = clipped;
      }
    }

    current = "fit";
    try {
      const DecayFit fit = fit_decay_rate(tr);
      rep.fitted_rate = fit.rate;
      rep.diagnostics["fit_window"] = {fit.t_a, fit.t_b};
      log << "[fit] rate=" << format_real(fit.rate) << " window=[" << format_real(fit.t_a) << ", "
          << format_real(fit.t_b) << "]\n";
      check("fitted_rate_ge_certified", fit.rate >= cert.decay_rate, fit.rate - cert.decay_rate);
      if (std::isfinite(sr.spec_abscissa_K))
        // transient slopes of a non-normal flow may exceed the abscissa, so this is not a certified check
        rep.diagnostics["fitted_rate_over_abscissa"] = fit.rate / sr.spec_abscissa_K;
    } catch (const NumericalError& e) {
      // A trace without dynamic range (e.g. u0 = m0) has no rate to fit.
      rep.diagnostics["fit_skipped"] = e.what();
    }
  } catch (const ValidationError& e) {
    rep.failed_stage = current;
    rep.failure = e.what();
    rep.validation_error = true;
    log << "[" << current << "] validation error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    rep.failed_stage = current;
    rep.failure = e.what();
    log << "[" << current << "] failed: " << e.what() << "\n";
  }
  write_text(rep.out_dir / "report.json", rep.to_json().dump(2) + "\n");
  return rep;
}

RunReport run(const fs::path& config_path, Stage stage, const fs::path& out, std::ostream& log) {
  return run(load_config(config_path), stage, out, log);
}

unsigned sweep_worker_count(int configured) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HYPOCOERCE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  if (configured > 0) n = std::min(n, static_cast<unsigned>(configured));
  return n;
}

int run_sweep(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  validate_config(cfg);
  struct Point {
    double gamma, beta;
    Index nx;
  };
  const std::vector<double> gs = cfg.sweep_gamma.empty() ? std::vector<double>{cfg.gamma} : cfg.sweep_gamma;
  const std::vector<double> bs = cfg.sweep_beta.empty() ? std::vector<double>{cfg.beta} : cfg.sweep_beta;
  const std::vector<Index> ns = cfg.sweep_nx.empty() ? std::vector<Index>{cfg.nx} : cfg.sweep_nx;
  std::vector<Point> pts;
  for (double g : gs)
    for (double b : bs)
      for (Index nx : ns) pts.push_back({g, b, nx});

  const fs::path root = fresh_output_dir(out.empty() ? fs::path(cfg.out_dir) : out);
  write_text(root / "config.json", config_to_json(cfg).dump(2) + "\n");
  struct Result {
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double rate = std::numeric_limits<double>::quiet_NaN();
    int code = 1;
    std::string log;
  };
  std::vector<Result> results(pts.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      RunConfig pc = cfg;
      pc.gamma = pts[i].gamma;
      pc.beta = pts[i].beta;
      pc.nx = pts[i].nx;
      std::ostringstream name;
      name << "gamma_" << pc.gamma << "_beta_" << pc.beta << "_nx_" << pc.nx;
      std::ostringstream plog;
      Result& r = results[i];
      try {
        validate_config(pc);
        const RunReport rr = run(pc, Stage::evolve, root / name.str(), plog);
        if (rr.spectral) r.alpha = rr.spectral->alpha;
        if (rr.certificate) r.delta = rr.certificate->delta;
        r.rate = rr.fitted_rate;
        r.code = rr.exit_code();
      } catch (const ValidationError& e) {
        plog << "validation error: " << e.what() << "\n";
        r.code = 2;
      } catch (const std::exception& e) {
        plog << "failed: " << e.what() << "\n";
        r.code = 1;
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      log << "== " << name.str() << " (exit " << r.code << ")\n" << plog.str();
    }
  };
  const unsigned workers = std::min<unsigned>(sweep_worker_count(cfg.sweep_workers), pts.size());
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::ostringstream csv;
  csv << "gamma,beta,nx,alpha,delta,fitted_rate\n";
  int worst = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    csv << format_real(pts[i].gamma) << ',' << format_real(pts[i].beta) << ',' << pts[i].nx << ','
        << format_real(results[i].alpha) << ',' << format_real(results[i].delta) << ','
        << format_real(results[i].rate) << '\n';
    // Severity order: crash (1) > validation (2) > failed check (3) > ok.
    const int c = results[i].code;
    auto rank = [](int code) { return code == 1 ? 3 : code == 2 ? 2 : code == 3 ? 1 : 0; };
    if (rank(c) > rank(worst)) worst = c;
  }
  write_text(root / "summary.csv", csv.str());
  log << "summary: " << (root / "summary.csv").string() << "\n";
  return worst;
}

}  // namespace hypo
