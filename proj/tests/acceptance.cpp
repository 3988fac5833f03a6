// One PASS/FAIL line per acceptance criterion; exit status is the number of
// failed criteria.
#include "hypocoerce/certificate.hpp"
#include "hypocoerce/evolution.hpp"
#include "hypocoerce/io.hpp"
#include "hypocoerce/phase_assembly.hpp"
#include "hypocoerce/run.hpp"
#include "hypocoerce/spectral.hpp"
#include "hypocoerce/velocity_ladder.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace hypo;
namespace fs = std::filesystem;

namespace {

const Potential h1 = Potential::make(PotentialKind::harmonic, 1.0);
const Potential hc = Potential::make(PotentialKind::harmonic_cosine, 1.0, 0.5, 2.0);
const std::vector<std::pair<const char*, Potential>> kPotentials{{"harmonic(1)", h1},
                                                                  {"harmonic_cosine(1,0.5,2)", hc}};
const std::vector<double> kGammas{0.25, 1.0, 4.0};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %s:%s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str(), secs);
  std::fflush(stdout);
}

std::string g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double top_singular(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()(0); }

double cert_delta(const PhaseSystem& s, double alpha) {
  return choose_epsilon(alpha, s.sp.gamma, operator_norm(s.L).value, operator_norm(s.Aop).value).delta;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "hypocoerce_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// Default-configuration quantities shared by criteria 7 and 8.
struct FullRun {
  PhaseSystem sys;
  Certificate cert;
  State s0;
  DecayTrace trace;
};

FullRun full_run() {
  const RunConfig cfg = load_config(fs::path(HYPOCOERCE_CONFIG_DIR) / "default.json");
  FullRun f{build_phase_system(cfg.potential(), cfg.gamma, cfg.R, cfg.nx, cfg.nv, cfg.scheme, cfg.rtol), {}, {}, {}};
  const SpectralReport sr = spectral_gaps(f.sys.Lambda2, f.sys.sp, f.sys.ls);
  const DerivativeBounds db = derivative_bounds(f.sys.potential);
  f.cert = make_certificate(sr.alpha, sr.tau, cfg.gamma, operator_norm(f.sys.L).value,
                            operator_norm(f.sys.Aop).value, analytic_norm_bounds(cfg.gamma, db.m2, db.m3), false);
  f.s0 = make_initial(cfg.init_kind, cfg.init, f.sys.sp, f.sys.ls);
  EvolveOptions o;
  o.dt = cfg.dt;
  o.T = cfg.T;
  o.scheme = cfg.evolve_scheme;
  o.record_every = cfg.dt;  // every step
  o.delta = f.cert.delta;
  o.C_L = certificate_CL(f.cert, false);
  const PhaseSystem& sys = f.sys;
  f.trace = evolve(sys.K, sys.m0, f.s0, o, [&sys](const Vec& u) { return relative_entropy(u, sys.sp, sys.ls); });
  return f;
}

}  // namespace

int main() {
  criterion(1, "ladder algebra exactness", [](Outcome& o) {
    double c_err = 0, ccr_err = 0, be0 = 0;
    for (Index nv : {2, 8, 32})
      for (double gm : kGammas) {
        const LadderSet ls = build_ladder(nv, gm);
        Mat pi1 = Mat::Zero(nv, nv);
        pi1(0, 0) = 1.0;
        c_err = std::max(c_err, (ls.Cdag * ls.C - (Mat::Identity(nv, nv) - pi1)).cwiseAbs().maxCoeff());
        const Mat ccr = ls.B * ls.Bdag - ls.Bdag * ls.B - gm * Mat::Identity(nv, nv);
        ccr_err = std::max(ccr_err, ccr.topLeftCorner(nv - 1, nv - 1).cwiseAbs().maxCoeff());
        be0 = std::max(be0, ls.B.col(0).cwiseAbs().maxCoeff());
      }
    o.detail << " CdagC-(I-Pi1)=" << g(c_err) << " [B,Bdag]-g=" << g(ccr_err) << " B.e0=" << g(be0);
    o.require(c_err <= 1e-14, "CdagC");
    o.require(ccr_err <= 1e-12, "CCR");
    o.require(be0 == 0.0, "B e0 = 0");
  });

  criterion(2, "structural exactness (128,16)", [](Outcome& o) {
    const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 128, 16);
    const Index n = s.K.n();
    const Mat X0 = s.X0.materialize(), K = s.K.materialize();
    const double anti = (X0 + X0.transpose()).cwiseAbs().maxCoeff();
    Mat expected = s.sp.gamma * Mat::Identity(n, n);
    for (Index i = 0; i < 128; ++i) expected(i * 16, i * 16) = 0.0;
    const double sym = (0.5 * (K + K.transpose()) - expected).cwiseAbs().maxCoeff();
    const double km0 = (K * s.m0).cwiseAbs().maxCoeff();
    const double ktm0 = (K.transpose() * s.m0).cwiseAbs().maxCoeff();
    const Mat P = s.Pi0.materialize();
    Mat P2(n, n);
    for (Index j = 0; j < n; ++j) P2.col(j) = s.Pi0.apply(P.col(j));
    const double idem = (P2 - P).cwiseAbs().maxCoeff();
    o.detail << " X0+X0^T=" << g(anti) << " Sym(K)-g(I-Pi1)=" << g(sym) << " Km0=" << g(km0)
             << " K^Tm0=" << g(ktm0) << " Pi0^2-Pi0=" << g(idem);
    for (double v : {anti, sym, km0, ktm0, idem}) o.require(v <= 1e-12, "1e-12");
  });

  criterion(3, "spectral gap value and sumset", [](Outcome& o) {
    double a[2];
    int i = 0;
    double worst = 0.0;
    for (Index nx : {512, 1024}) {
      const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, nx, 16);
      const SpectralReport r = spectral_gaps(s.Lambda2, s.sp, s.ls);
      a[i++] = r.alpha;
      worst = std::max(worst, r.sumset_mismatch);
    }
    for (const auto& [name, p] : kPotentials)
      for (double gm : kGammas)
        for (Index nx : {64, 128}) {
          const PhaseSystem s = build_phase_system(p, gm, 8.0, nx, nx / 8);
          worst = std::max(worst, spectral_gaps(s.Lambda2, s.sp, s.ls).sumset_mismatch);
        }
    o.detail << " alpha(512)=" << g(a[0]) << " alpha(1024)=" << g(a[1]) << " max|alpha-min(tau,g)|=" << g(worst);
    o.require(a[0] >= 0.90 && a[0] <= 1.02, "alpha(512) in [0.90,1.02]");
    o.require(std::abs(a[1] - 1.0) < std::abs(a[0] - 1.0), "nx=1024 strictly closer to 1");
    o.require(worst <= 1e-10, "sumset 1e-10");
  });

  criterion(4, "norm oracle (32,8)", [](Outcome& o) {
    double worst = 0.0;
    for (const auto& [name, p] : kPotentials)
      for (double gm : kGammas) {
        const PhaseSystem s = build_phase_system(p, gm, 8.0, 32, 8);
        const double sL = top_singular(s.L.materialize()), sA = top_singular(s.Aop.materialize());
        worst = std::max(worst, std::abs(operator_norm(s.L).value - sL) / sL);
        worst = std::max(worst, std::abs(operator_norm(s.Aop).value - sA) / sA);
      }
    o.detail << " max relative error=" << g(worst);
    o.require(worst <= 1e-6, "relative 1e-6");
  });

  criterion(5, "analytic bound dominance", [](Outcome& o) {
    double minL = INFINITY, minA = INFINITY;
    for (const auto& [name, p] : kPotentials)
      for (double gm : kGammas)
        for (auto [nx, nv] : {std::pair<Index, Index>{64, 8}, {128, 16}}) {
          const PhaseSystem s = build_phase_system(p, gm, 8.0, nx, nv);
          const DerivativeBounds db = derivative_bounds(p);
          const NormBounds b = analytic_norm_bounds(gm, db.m2, db.m3);
          minL = std::min(minL, b.boundL / operator_norm(s.L).value);
          minA = std::min(minA, b.boundA / operator_norm(s.Aop).value);
        }
    o.detail << " min boundL/|L|=" << g(minL) << " min boundA/|A|=" << g(minA);
    o.require(minL >= 1.0, "boundL >= |L|");
    o.require(minA >= 1.0, "boundA >= |A|");
  });

  criterion(6, "coercivity certificate", [](Outcome& o) {
    double ratio[2];
    int i = 0;
    for (auto [nx, nv] : {std::pair<Index, Index>{128, 16}, {256, 24}}) {
      const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, nx, nv);
      const SpectralReport r = spectral_gaps(s.Lambda2, s.sp, s.ls);
      const EpsilonChoice e = choose_epsilon(r.alpha, 1.0, operator_norm(s.L).value, operator_norm(s.Aop).value);
      const CoercivityForm f(s.K, s.L, s.Pi0);
      const CoercivityResult c = f.lambda_min(e.epsilon);
      ratio[i] = c.lambda_min / e.delta;
      o.detail << " (" << nx << "," << nv << (c.dense ? " dense" : " matrix-free") << "): lambda_min="
               << g(c.lambda_min) << " delta=" << g(e.delta) << " ratio=" << g(ratio[i]);
      o.require(c.lambda_min >= 0.9 * e.delta, "lambda_min >= 0.9 delta");
      if (i == 0) {
        const double l0 = f.lambda_min(0.0).lambda_min;
        o.detail << " lambda_min(eps=0)=" << g(l0);
        o.require(l0 <= 1e-10, "eps=0 not coercive");
      }
      ++i;
    }
    o.require(ratio[1] >= ratio[0], "ratio nondecreasing");
  });

  FullRun fr;
  bool have_full = false;
  criterion(7, "certified decay envelope", [&](Outcome& o) {
    fr = full_run();
    have_full = true;
    const double dev0 = fr.trace.rows.front().dev;
    const double CL = certificate_CL(fr.cert, false);
    double worst = -INFINITY;
    for (const TraceRow& r : fr.trace.rows)
      worst = std::max(worst, r.dev / decay_envelope(fr.cert.delta, CL, dev0, r.t));
    o.detail << " delta=" << g(fr.cert.delta) << " C_L=" << g(CL) << " max dev/envelope=" << g(worst);
    o.require(worst <= 1.0, "dev <= envelope");

    // fitted-rate bracket on the scaled (64,8) run
    const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 64, 8);
    const SpectralReport r = spectral_gaps(s.Lambda2, s.sp, s.ls);
    const EpsilonChoice e = choose_epsilon(r.alpha, 1.0, operator_norm(s.L).value, operator_norm(s.Aop).value);
    const KSpectrum ks = spectrum_K(s.K, s.m0);
    EvolveOptions opt;
    opt.dt = 0.01;
    opt.T = 40.0;
    const DecayTrace tr = evolve(s.K, s.m0, make_initial(InitKind::shifted_maxwellian, InitParams{}, s.sp, s.ls), opt);
    const DecayFit fit = fit_decay_rate(tr);
    const double full_rate = fit_decay_rate(fr.trace).rate;
    o.detail << " | (64,8): fitted=" << g(fit.rate) << " on [" << g(fit.t_a) << "," << g(fit.t_b)
             << "] delta/3=" << g(e.delta / 3) << " abscissa=" << g(ks.spec_abscissa)
             << " | (128,16) fitted=" << g(full_rate);
    o.require(fit.rate >= e.delta / 3.0, "fitted >= delta/3");
    o.require(fit.rate <= 1.05 * ks.spec_abscissa, "fitted <= abscissa + 5%");
  });

  criterion(8, "entropy chain", [&](Outcome& o) {
    if (!have_full) throw std::runtime_error("full run unavailable");
    o.require(fr.trace.entropy_valid, "nonnegative f0");
    const double dev0 = fr.trace.rows.front().dev, nu0 = fr.s0.u.norm();
    double minH = INFINITY, w26 = -INFINITY, wcor = -INFINITY;
    for (const TraceRow& r : fr.trace.rows) {
      minH = std::min(minH, r.entropy);
      w26 = std::max(w26, r.entropy - r.norm_u * r.dev);
      wcor = std::max(wcor, r.entropy - 3.0 * nu0 * dev0 * std::exp(-fr.cert.delta * r.t / 3.0));
    }
    const double h_m0 = relative_entropy(fr.sys.m0, fr.sys.sp, fr.sys.ls).value;
    o.detail << " rows=" << fr.trace.rows.size() << " H(0)=" << g(fr.trace.rows.front().entropy)
             << " min H=" << g(minH) << " max H-|u|dev=" << g(w26) << " max H-envelope=" << g(wcor)
             << " H(m0)=" << g(h_m0);
    o.require(minH >= -1e-10, "H >= -1e-10");
    o.require(w26 <= 1e-8, "H <= |u| dev");
    o.require(wcor <= 1e-8, "H <= envelope");
    o.require(std::abs(h_m0) <= 1e-10, "H(m0) = 0");
  });

  criterion(9, "integrator oracles (32,8)", [](Outcome& o) {
    const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 32, 8);
    const State st = make_initial(InitKind::shifted_maxwellian, InitParams{}, s.sp, s.ls);
    const Mat K = s.K.materialize();
    double err[2];
    int i = 0;
    for (double dt : {0.02, 0.01}) {
      err[i] = 0.0;
      for (double T : {0.5, 1.0, 2.0, 4.0}) {
        EvolveOptions opt;
        opt.dt = dt;
        opt.T = T;
        const Vec ref = Mat(-T * K).exp() * st.u;
        err[i] = std::max(err[i], (evolve(s.K, s.m0, st, opt).u_final - ref).norm() / ref.norm());
      }
      ++i;
    }
    EvolveOptions opt;
    opt.dt = 0.01;
    opt.T = 100.0;
    opt.record_every = 0.01;
    const DecayTrace tr = evolve(s.K, s.m0, st, opt);
    double drift = 0.0;
    for (const TraceRow& r : tr.rows) drift = std::max(drift, std::abs(r.mass - 1.0));
    o.detail << " err(0.02)=" << g(err[0]) << " err(0.01)=" << g(err[1]) << " ratio=" << g(err[0] / err[1])
             << " steps=" << tr.steps << " mass drift=" << g(drift) << " max step growth=" << g(tr.max_step_growth);
    o.require(err[0] / err[1] >= 3.5 && err[0] / err[1] <= 4.5, "ratio in [3.5,4.5]");
    o.require(tr.steps == 10000, "1e4 steps");
    o.require(drift <= 1e-12, "mass drift");
    o.require(tr.max_step_growth <= 1e-10, "contraction");
  });

  criterion(10, "commutator convergence", [](Outcome& o) {
    double bx = 0.0;
    for (const auto& [name, p] : kPotentials)
      for (double gm : kGammas) {
        const SpatialOps sp = build_spatial_ops(make_grid(8.0, 129), p, gm);
        bx = std::max(bx, commutator_residuals(sp, build_ladder(8, gm), p).b_X0);
      }
    o.detail << " max [b,X0]-a=" << g(bx);
    o.require(bx <= 1e-12, "[b,X0] - a exact");
    for (Scheme sc : {Scheme::mimetic, Scheme::centered})
      for (const auto& [name, p] : kPotentials) {
        const double r1 = commutator_residuals(build_spatial_ops(make_grid(8.0, 129), p, 1.0, sc), build_ladder(8, 1.0), p).a_X0;
        const double r2 = commutator_residuals(build_spatial_ops(make_grid(8.0, 257), p, 1.0, sc), build_ladder(8, 1.0), p).a_X0;
        const double ratio = r1 / r2;
        o.detail << " " << to_string(sc) << "/" << name << " ratio=" << g(ratio);
        if (sc == Scheme::mimetic)
          o.require(ratio >= 1.7 && ratio <= 2.3, "mimetic ratio in [1.7,2.3]");
        else
          o.require(ratio >= 3.5 && ratio <= 4.5, "centered ratio in [3.5,4.5]");
      }
  });

  criterion(11, "determinism", [](Outcome& o) {
    const fs::path cfg = fs::path(HYPOCOERCE_CONFIG_DIR) / "default.json";
    fs::path dirs[2] = {scratch() / "det_a", scratch() / "det_b"};
    for (const fs::path& d : dirs) {
      const std::string cmd = std::string(HYPOCOERCE_BIN) + " evolve --config " + cfg.string() + " --out " +
                              d.string() + " > " + (d.string() + ".log") + " 2>&1";
      const int rc = std::system(cmd.c_str());
      o.require(rc == 0, "evolve exit 0");
    }
    for (const char* f : {"certificate.json", "trace.csv"}) {
      const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
      o.detail << " " << f << ": " << a.size() << " bytes" << (a == b ? " identical" : " DIFFER");
      o.require(!a.empty() && a == b, std::string(f) + " identical");
    }
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
