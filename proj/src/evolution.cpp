#include "hypocoerce/evolution.hpp"

#include "hypocoerce/linalg.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hypo {

std::string_view to_string(InitKind k) {
  switch (k) {
    case InitKind::shifted_maxwellian: return "shifted_maxwellian";
    case InitKind::mode_perturbation: return "mode_perturbation";
    case InitKind::random: return "random";
  }
  return "unknown";
}

InitKind init_kind_from_string(std::string_view name) {
  if (name == "shifted_maxwellian") return InitKind::shifted_maxwellian;
  if (name == "mode_perturbation") return InitKind::mode_perturbation;
  if (name == "random") return InitKind::random;
  throw ValidationError("init.kind", "unknown kind '" + std::string(name) + "'");
}

std::string_view to_string(Integrator k) {
  switch (k) {
    case Integrator::crank_nicolson: return "crank_nicolson";
    case Integrator::backward_euler: return "backward_euler";
    case Integrator::dense_expm: return "dense_expm";
  }
  return "unknown";
}

Integrator integrator_from_string(std::string_view name) {
  if (name == "crank_nicolson") return Integrator::crank_nicolson;
  if (name == "backward_euler") return Integrator::backward_euler;
  if (name == "dense_expm") return Integrator::dense_expm;
  throw ValidationError("evolve.scheme", "unknown scheme '" + std::string(name) + "'");
}

Vec shifted_maxwellian_coefficients(Index nv, double v0) {
  const GaussHermite gh = gauss_hermite(static_cast<int>(nv) + 2);
  const Vec shifted = (gh.nodes.array() + v0).matrix();
  return hermite_polynomials(nv, shifted) * gh.weights;
}

State make_initial(InitKind kind, const InitParams& params, const SpatialOps& sp, const LadderSet& ls) {
  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  const Vec m0 = maxwellian_vector(sp, ls);
  State s;
  switch (kind) {
    case InitKind::shifted_maxwellian: {
      if (!(params.sigma > 0.0)) throw ValidationError("init.params.sigma", "must be > 0");
      const Vec c = shifted_maxwellian_coefficients(nv, params.v0);
      Vec w = Vec::Zero(nx);
      for (Index i = 0; i < nx; ++i) {
        if (!(sp.phi0(i) > 0.0)) continue;
        const double d = sp.grid.nodes(i) - params.x0;
        w(i) = std::exp(-d * d / (2.0 * params.sigma * params.sigma) - std::log(sp.phi0(i)));
      }
      s.u.resize(nx * nv);
      for (Index i = 0; i < nx; ++i) s.u.segment(i * nv, nv) = w(i) * c;
      break;
    }
    case InitKind::mode_perturbation: {
      if (params.mode < 0 || params.mode >= nv) throw ValidationError("init.params.mode", "must lie in [0, nv)");
      Vec p = Vec::Zero(nx * nv);
      for (Index i = 0; i < nx; ++i) p(i * nv + params.mode) = sp.grid.nodes(i) * sp.phi0(i);
      p -= p.dot(m0) * m0;
      s.u = m0;
      if (params.eta != 0.0) s.u += params.eta * p / p.norm();
      break;
    }
    case InitKind::random: {
      const Vec g = random_gaussian(nx * nv, params.seed);
      s.u = m0 + params.eta * g / g.norm();
      break;
    }
  }
  const double mass = s.u.dot(m0);
  if (!(mass > 0.0))
    throw ValidationError(kind == InitKind::random ? "init.params.eta" : "init.params",
                          "initial data has (u0, m0) <= 0 (sign-indefinite mass)");
  s.u /= mass;
  s.mass = s.u.dot(m0);
  s.t = 0.0;
  return s;
}

EntropyResult relative_entropy(const Vec& u, const SpatialOps& sp, const LadderSet& ls, int quad_order) {
  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  if (u.size() != nx * nv) throw ValidationError("u", "length does not match nx·nv");
  const int q = quad_order == 0 ? static_cast<int>(2 * nv) : quad_order;
  if (q < 2 * nv) throw ValidationError("quad_order", "must be >= 2·nv");
  const Vec m0 = maxwellian_vector(sp, ls);
  const double mass = u.dot(m0);
  if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("u", "state not normalized: (u, m0) = " + std::to_string(mass));

  const GaussHermite gh = gauss_hermite(q);
  const Mat p = hermite_polynomials(nv, gh.nodes);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Mat S = Eigen::Map<const RowMat>(u.data(), nx, nv) * p;

  constexpr double floor = 1e-14;
  double h = 0.0;
  double clipped = 0.0;
  double total = 0.0;
  for (Index i = 0; i < nx; ++i) {
    const double phi = sp.phi0(i);
    if (!(phi > 0.0)) continue;
    double row = 0.0;
    for (int j = 0; j < q; ++j) {
      const double sij = S(i, j);
      const double w = gh.weights(j);
      total += phi * w * std::abs(sij);
      if (sij < floor) clipped += phi * w * (floor - sij);
      const double sc = std::max(sij, floor);
      row += w * sc * std::log(sc / phi);
    }
    h += phi * row;
  }
  EntropyResult r;
  r.value = h;
  r.clipped_fraction = total > 0.0 ? clipped / total : 0.0;
  r.flagged = r.clipped_fraction > 1e-6;
  return r;
}

DecayTrace evolve(const PhaseOperator& K, const Vec& m0_in, const State& s0, const EvolveOptions& opts,
                  const EntropyFn& entropy) {
  if (!(opts.dt > 0.0)) throw ValidationError("evolve.dt", "must be > 0");
  if (!(opts.T >= opts.dt)) throw ValidationError("evolve.T", "must be >= dt");
  if (opts.record_every < 0.0) throw ValidationError("evolve.record_every", "must be >= 0");
  const Index n = K.n();
  if (s0.u.size() != n || m0_in.size() != n) throw ValidationError("u", "length does not match operator");
  if (opts.scheme == Integrator::dense_expm && n > 2048)
    throw ValidationError("evolve.scheme", "dense_expm only for n <= 2048");

  const Vec m0 = m0_in.normalized();
  const long steps = std::lround(opts.T / opts.dt);
  const double rec = opts.record_every > 0.0 ? opts.record_every : std::max(opts.dt, opts.T / 2000.0);
  const long rec_steps = std::max(1L, std::lround(rec / opts.dt));

  const SparseMatrix& k = K.matrix();
  const SparseMatrix id = sparse_identity(n);
  Eigen::SparseLU<SparseMatrix> lu;
  SparseMatrix lhs;
  SparseMatrix rhs_op;
  Mat expm;
  switch (opts.scheme) {
    case Integrator::crank_nicolson:
      lhs = id + (0.5 * opts.dt) * k;
      rhs_op = id - (0.5 * opts.dt) * k;
      break;
    case Integrator::backward_euler:
      lhs = id + opts.dt * k;
      rhs_op = id;
      break;
    case Integrator::dense_expm:
      expm = (Mat(-opts.dt * Mat(k))).exp();
      break;
  }
  if (opts.scheme != Integrator::dense_expm) {
    lhs.makeCompressed();
    lu.analyzePattern(lhs);
    lu.factorize(lhs);
    if (lu.info() != Eigen::Success) throw NumericalError("implicit step factorization failed");
  }

  auto step = [&](const Vec& u) -> Vec {
    if (opts.scheme == Integrator::dense_expm) return expm * u;
    const Vec b = rhs_op * u;
    Vec y = lu.solve(b);
    if (lu.info() != Eigen::Success) throw NumericalError("implicit step solve failed");
    y += lu.solve(Vec(b - lhs * y));
    return y;
  };
  auto deviation = [&](const Vec& u) { return (u - m0.dot(u) * m0).norm(); };

  DecayTrace tr;
  Vec u = s0.u;
  const double dev0 = deviation(u);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  bool use_entropy = static_cast<bool>(entropy);
  auto record = [&](double t, double dev) {
    TraceRow row;
    row.t = t;
    row.dev = dev;
    row.mass = m0.dot(u) * m0_in.norm();
    row.norm_u = u.norm();
    row.envelope = opts.delta > 0.0 ? 3.0 * dev0 * std::exp(-opts.delta * t / (3.0 * opts.C_L)) : nan;
    row.entropy = nan;
    if (use_entropy) {
      const EntropyResult e = entropy(u);
      row.entropy = e.value;
      row.clipped = e.clipped_fraction;
    }
    tr.rows.push_back(row);
  };
  if (use_entropy) {
    const EntropyResult e0 = entropy(u);
    tr.entropy_valid = !e0.flagged;
    use_entropy = tr.entropy_valid;
  }
  record(s0.t, dev0);

  double dev = dev0;
  for (long s = 1; s <= steps; ++s) {
    Vec next = step(u);
    const double dnext = deviation(next);
    const double slack = 1e-15 * std::max(1.0, u.norm());
    if (dnext > dev * (1.0 + 1e-10) + slack)
      throw NumericalError("non-contraction at step " + std::to_string(s) + ": dev " + std::to_string(dev) +
                           " -> " + std::to_string(dnext));
    if (dev > 0.0) tr.max_step_growth = std::max(tr.max_step_growth, (dnext - slack) / dev - 1.0);
    u = std::move(next);
    dev = dnext;
    if (s % rec_steps == 0 || s == steps) record(s0.t + static_cast<double>(s) * opts.dt, dev);
  }
  tr.steps = static_cast<int>(steps);
  tr.u_final = u;
  return tr;
}

DecayFit fit_decay_rate(const DecayTrace& trace) {
  if (trace.rows.size() < 10) throw ValidationError("trace", "need at least 10 rows");
  const double dev0 = trace.rows.front().dev;
  if (!(dev0 > 1e-13)) throw NumericalError("insufficient dynamic range: initial deviation is zero");
  double st = 0, sy = 0, stt = 0, sty = 0;
  DecayFit fit;
  bool first = true;
  for (const TraceRow& r : trace.rows) {
    const double rel = r.dev / dev0;
    if (!(rel >= 1e-6 && rel <= 1e-1)) continue;
    const double y = std::log(r.dev);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
    if (first) fit.t_a = r.t;
    first = false;
    fit.t_b = r.t;
    ++fit.points;
  }
  if (fit.points < 3) throw NumericalError("insufficient dynamic range: dev never drops below 1e-1 of dev(0)");
  const double np = fit.points;
  const double slope = (np * sty - st * sy) / (np * stt - st * st);
  fit.rate = -slope;
  return fit;
}

}  // namespace hypo
