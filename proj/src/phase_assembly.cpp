#include "hypocoerce/phase_assembly.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace hypo {

std::string_view to_string(OperatorRole r) {
  switch (r) {
    case OperatorRole::X0: return "X0";
    case OperatorRole::K: return "K";
    case OperatorRole::Lambda2: return "Lambda2";
    case OperatorRole::Pi1: return "Pi1";
    case OperatorRole::Pi0: return "Pi0";
    case OperatorRole::L: return "L";
    case OperatorRole::Aop: return "Aop";
    case OperatorRole::custom: return "custom";
  }
  return "custom";
}

PhaseOperator PhaseOperator::from_sparse(OperatorRole role, SparseMatrix m, Index nx, Index nv) {
  if (m.rows() != nx * nv || m.cols() != nx * nv) throw ValidationError("operator", "dimension mismatch");
  PhaseOperator op;
  op.role_ = role;
  op.nx_ = nx;
  op.nv_ = nv;
  m.makeCompressed();
  op.sparse_ = std::make_shared<const SparseMatrix>(std::move(m));
  return op;
}

PhaseOperator PhaseOperator::from_maps(OperatorRole role, Index nx, Index nv, LinearMap apply,
                                       LinearMap apply_transpose) {
  PhaseOperator op;
  op.role_ = role;
  op.nx_ = nx;
  op.nv_ = nv;
  op.apply_ = std::move(apply);
  op.apply_t_ = std::move(apply_transpose);
  return op;
}

const SparseMatrix& PhaseOperator::matrix() const {
  if (!sparse_) throw std::logic_error(std::string(to_string(role_)) + " has no sparse representation");
  return *sparse_;
}

Vec PhaseOperator::apply(const Vec& u) const {
  if (u.size() != n()) throw ValidationError("u", "length does not match operator dimension");
  if (sparse_) return *sparse_ * u;
  return apply_(u);
}

Vec PhaseOperator::apply_transpose(const Vec& u) const {
  if (u.size() != n()) throw ValidationError("u", "length does not match operator dimension");
  if (sparse_) return sparse_->transpose() * u;
  return apply_t_(u);
}

Mat PhaseOperator::materialize() const {
  if (n() > kDenseCap)
    throw ValidationError("n", "dense materialization refused above " + std::to_string(kDenseCap));
  if (sparse_) return Mat(*sparse_);
  Mat out(n(), n());
  Vec e = Vec::Zero(n());
  for (Index j = 0; j < n(); ++j) {
    e(j) = 1.0;
    out.col(j) = apply_(e);
    e(j) = 0.0;
  }
  return out;
}

Mat PhaseOperator::materialize_transpose() const {
  if (n() > kDenseCap)
    throw ValidationError("n", "dense materialization refused above " + std::to_string(kDenseCap));
  if (sparse_) return Mat(sparse_->transpose());
  Mat out(n(), n());
  Vec e = Vec::Zero(n());
  for (Index j = 0; j < n(); ++j) {
    e(j) = 1.0;
    out.col(j) = apply_t_(e);
    e(j) = 0.0;
  }
  return out;
}

SparseMatrix lift_position(const SparseMatrix& p, Index nv) {
  return kron(p, sparse_identity(nv));
}

SparseMatrix lift_velocity(const Mat& q, Index nx) {
  return kron(sparse_identity(nx), SparseMatrix(q.sparseView()));
}

namespace {

void check_compatible(const SpatialOps& sp, const LadderSet& ls) {
  if (sp.gamma != ls.gamma) throw ValidationError("gamma", "spatial and velocity operators use different gamma");
  if (sp.A.rows() != sp.grid.nx) throw ValidationError("grid.nx", "spatial operators not assembled");
}

}  // namespace

PhaseOperator assemble_transport(const SpatialOps& sp, const LadderSet& ls) {
  check_compatible(sp, ls);
  const SparseMatrix B = ls.B.sparseView();
  const SparseMatrix Bt = ls.Bdag.sparseView();
  SparseMatrix x0 = (kron(sp.A, Bt) - kron(sp.Adag, B)) * (1.0 / ls.gamma);
  x0.prune(0.0);
  return PhaseOperator::from_sparse(OperatorRole::X0, std::move(x0), sp.grid.nx, ls.nv);
}

PhaseOperator assemble_transport_direct(const SpatialOps& sp, const LadderSet& ls) {
  const Index nx = sp.grid.nx;
  std::vector<Eigen::Triplet<double>> t;
  const double c = 1.0 / (2.0 * sp.grid.h);
  for (Index i = 0; i < nx; ++i) {
    if (i + 1 < nx) t.emplace_back(i, i + 1, c);
    if (i > 0) t.emplace_back(i, i - 1, -c);
  }
  SparseMatrix D(nx, nx);
  D.setFromTriplets(t.begin(), t.end());
  const SparseMatrix vmul = velocity_multiplication(ls).sparseView();
  const SparseMatrix dv = velocity_derivative(ls).sparseView();
  SparseMatrix x0 = kron(D, vmul) - kron(sparse_diagonal(sp.dV), dv);
  return PhaseOperator::from_sparse(OperatorRole::custom, std::move(x0), nx, ls.nv);
}

PhaseOperator assemble_K(const PhaseOperator& X0, const LadderSet& ls) {
  if (X0.nv() != ls.nv) throw ValidationError("nv", "transport and ladder disagree on nv");
  const Index nx = X0.nx();
  SparseMatrix q = sparse_identity(nx * ls.nv) - lift_velocity(ls.Pi1v, nx);
  SparseMatrix k = X0.matrix() + ls.gamma * q;
  k.prune(0.0);
  return PhaseOperator::from_sparse(OperatorRole::K, std::move(k), nx, ls.nv);
}

PhaseOperator assemble_lambda2(const SpatialOps& sp, const LadderSet& ls) {
  check_compatible(sp, ls);
  const Index nx = sp.grid.nx;
  SparseMatrix l2 = sparse_identity(nx * ls.nv) + lift_position(sp.W, ls.nv) + lift_velocity(ls.Nop, nx);
  l2.prune(0.0);
  auto solver = std::make_shared<const SpdSolver>(l2);
  PhaseOperator op = PhaseOperator::from_sparse(OperatorRole::Lambda2, std::move(l2), nx, ls.nv);
  op.attach_solver(std::move(solver));
  return op;
}

Vec apply_inverse_lambda2(const PhaseOperator& L2, const Vec& u, double rtol) {
  if (!(rtol > 0.0 && rtol <= 1e-8)) throw ValidationError("solver.rtol", "must lie in (0, 1e-8]");
  if (!L2.solver()) throw ValidationError("L2", "operator has no attached factorization");
  return L2.solver()->solve(u, rtol);
}

PhaseOperator assemble_L(const SpatialOps& sp, const LadderSet& ls, const PhaseOperator& L2, double rtol) {
  check_compatible(sp, ls);
  const Index nx = sp.grid.nx;
  auto right = std::make_shared<const SparseMatrix>(kron(sp.Adag, SparseMatrix(ls.B.sparseView())));
  auto right_t = std::make_shared<const SparseMatrix>(kron(sp.A, SparseMatrix(ls.Bdag.sparseView())));
  auto l2 = L2;
  return PhaseOperator::from_maps(
      OperatorRole::L, nx, ls.nv,
      [=](const Vec& u) { return apply_inverse_lambda2(l2, *right * u, rtol); },
      [=](const Vec& u) { return Vec(*right_t * apply_inverse_lambda2(l2, u, rtol)); });
}

PhaseOperator assemble_A_operator(const SpatialOps& sp, const LadderSet& ls, const PhaseOperator& L2,
                                  const Potential& p, double rtol) {
  check_compatible(sp, ls);
  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  Vec hess(nx);
  for (Index i = 0; i < nx; ++i) hess(i) = p.V2(sp.grid.nodes(i));

  struct Parts {
    SparseMatrix a, at, b, bt, h, hm1;
  };
  auto parts = std::make_shared<Parts>();
  parts->a = lift_position(sp.A, nv);
  parts->at = lift_position(sp.Adag, nv);
  parts->b = lift_velocity(ls.B, nx);
  parts->bt = lift_velocity(ls.Bdag, nx);
  parts->h = lift_position(sparse_diagonal(hess), nv);
  parts->hm1 = lift_position(sparse_diagonal((hess.array() - 1.0).matrix()), nv);
  const PhaseOperator L = assemble_L(sp, ls, L2, rtol);
  auto l2 = L2;
  auto inv = [l2, rtol](const Vec& u) { return apply_inverse_lambda2(l2, u, rtol); };

  auto apply = [=](const Vec& u) {
    const Parts& q = *parts;
    const Vec lu = L.apply(u);
    Vec s = q.bt * (q.hm1 * (q.a * lu));
    s += q.at * (q.hm1 * (q.b * lu));
    s -= q.bt * (q.h * (q.b * u));
    return inv(s);
  };
  auto apply_t = [=](const Vec& u) {
    const Parts& q = *parts;
    const Vec w = inv(u);
    Vec s = L.apply_transpose(q.at * (q.hm1 * (q.b * w)));
    s += L.apply_transpose(q.bt * (q.hm1 * (q.a * w)));
    s -= q.bt * (q.h * (q.b * w));
    return s;
  };
  return PhaseOperator::from_maps(OperatorRole::Aop, nx, nv, apply, apply_t);
}

PhaseOperator projector_pi1(const SpatialOps& sp, const LadderSet& ls) {
  return PhaseOperator::from_sparse(OperatorRole::Pi1, lift_velocity(ls.Pi1v, sp.grid.nx), sp.grid.nx, ls.nv);
}

Vec maxwellian_vector(const SpatialOps& sp, const LadderSet& ls) {
  Vec m0 = Vec::Zero(sp.grid.nx * ls.nv);
  for (Index i = 0; i < sp.grid.nx; ++i) m0(i * ls.nv) = sp.phi0(i);
  return m0;
}

PhaseOperator projector_pi0(const SpatialOps& sp, const LadderSet& ls) {
  auto m0 = std::make_shared<const Vec>(maxwellian_vector(sp, ls));
  auto proj = [m0](const Vec& u) { return Vec(m0->dot(u) * *m0); };
  return PhaseOperator::from_maps(OperatorRole::Pi0, sp.grid.nx, ls.nv, proj, proj);
}

Vec smooth_test_vector(const SpatialOps& sp, const LadderSet& ls) {
  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  Vec u(nx * nv);
  for (Index i = 0; i < nx; ++i) {
    const double x = sp.grid.nodes(i);
    const double g = (1.0 + x + 0.3 * x * x) * std::exp(-0.25 * x * x);
    for (Index k = 0; k < nv; ++k) u(i * nv + k) = g / static_cast<double>(k + 1);
  }
  return u;
}

namespace {

double restricted_max_abs(const SparseMatrix& r, Index nv) {
  double best = 0.0;
  for (Index c = 0; c < r.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(r, c); it; ++it)
      if (it.row() % nv != nv - 1) best = std::max(best, std::abs(it.value()));
  return best;
}

double restricted_relative(const Vec& r, const Vec& u, const SpatialOps& sp, Index nv) {
  const double cut = 0.5 * sp.grid.R;
  double s = 0.0;
  for (Index j = 0; j < r.size(); ++j) {
    if (j % nv == nv - 1) continue;
    if (std::abs(sp.grid.nodes(j / nv)) > cut) continue;
    s += r(j) * r(j);
  }
  return std::sqrt(s) / u.norm();
}

}  // namespace

CommutatorReport commutator_residuals(const SpatialOps& sp, const LadderSet& ls, const Potential& p) {
  check_compatible(sp, ls);
  const Index nx = sp.grid.nx;
  const Index nv = ls.nv;
  const double g = ls.gamma;
  CommutatorReport rep;

  const SparseMatrix B = ls.B.sparseView();
  const SparseMatrix Bt = ls.Bdag.sparseView();
  const SparseMatrix Iv = sparse_identity(nv);
  {
    SparseMatrix ccr = B * Bt - Bt * B - g * Iv;
    rep.ccr_b = restricted_max_abs(ccr, nv);
    SparseMatrix bbb = Bt * (Bt * B) - (Bt * B) * Bt + g * Bt;
    rep.b_number_shift = restricted_max_abs(bbb, nv);
  }

  const SparseMatrix a = lift_position(sp.A, nv);
  const SparseMatrix at = lift_position(sp.Adag, nv);
  const SparseMatrix b = lift_velocity(ls.B, nx);
  const SparseMatrix bt = lift_velocity(ls.Bdag, nx);
  const PhaseOperator X0op = assemble_transport(sp, ls);
  const SparseMatrix& X0 = X0op.matrix();
  const SparseMatrix L2 = sparse_identity(nx * nv) + lift_position(sp.W, nv) + lift_velocity(ls.Nop, nx);

  rep.lambda2_b = restricted_max_abs(SparseMatrix(L2 * b - b * L2 + g * b), nv);
  rep.b_X0 = restricted_max_abs(SparseMatrix(b * X0 - X0 * b - a), nv);

  Vec hess(nx);
  for (Index i = 0; i < nx; ++i) hess(i) = p.V2(sp.grid.nodes(i));
  const SparseMatrix H = lift_position(sparse_diagonal(hess), nv);
  const SparseMatrix Hm1 = lift_position(sparse_diagonal((hess.array() - 1.0).matrix()), nv);

  const Vec u = smooth_test_vector(sp, ls);
  {
    const Vec r = a * (X0 * u) - X0 * (a * u) + H * (b * u);
    rep.a_X0 = restricted_relative(r, u, sp, nv);
  }
  {
    const Vec r = L2 * (X0 * u) - X0 * (L2 * u) + bt * (Hm1 * (a * u)) + at * (Hm1 * (b * u));
    rep.lambda2_X0 = restricted_relative(r, u, sp, nv);
  }
  {
    Vec gx(nx);
    for (Index i = 0; i < nx; ++i) gx(i) = u(i * nv);
    Vec r = sp.Adag * (sp.W * gx) - sp.W * (sp.Adag * gx) + g * (sp.Adag * hess.cwiseProduct(gx));
    for (Index i = 0; i < nx; ++i)
      if (std::abs(sp.grid.nodes(i)) > 0.5 * sp.grid.R) r(i) = 0.0;
    rep.a_witten_shift = r.norm() / gx.norm();
  }
  return rep;
}

PhaseSystem build_phase_system(const Potential& p, double gamma, double R, Index nx, Index nv, Scheme scheme,
                               double rtol) {
  PhaseSystem s;
  s.potential = p;
  s.rtol = rtol;
  s.ls = build_ladder(nv, gamma);
  s.sp = build_spatial_ops(make_grid(R, nx), p, gamma, scheme);
  s.m0 = maxwellian_vector(s.sp, s.ls);
  s.X0 = assemble_transport(s.sp, s.ls);
  s.K = assemble_K(s.X0, s.ls);
  s.Lambda2 = assemble_lambda2(s.sp, s.ls);
  s.Pi1 = projector_pi1(s.sp, s.ls);
  s.Pi0 = projector_pi0(s.sp, s.ls);
  s.L = assemble_L(s.sp, s.ls, s.Lambda2, rtol);
  s.Aop = assemble_A_operator(s.sp, s.ls, s.Lambda2, p, rtol);
  return s;
}

void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace hypo
