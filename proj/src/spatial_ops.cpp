#include "hypocoerce/spatial_ops.hpp"

#include "hypocoerce/linalg.hpp"

#include <cmath>
#include <vector>

namespace hypo {

SpatialGrid make_grid(double R, Index nx) {
  if (!(R > 0.0)) throw ValidationError("grid.R", "must be > 0");
  if (nx < 8) throw ValidationError("grid.nx", "must be >= 8");
  SpatialGrid g;
  g.R = R;
  g.nx = nx;
  g.h = 2.0 * R / static_cast<double>(nx - 1);
  g.nodes.resize(nx);
  // (2i - (nx-1))·R/(nx-1) keeps the grid exactly symmetric about 0.
  for (Index i = 0; i < nx; ++i)
    g.nodes(i) = static_cast<double>(2 * i - (nx - 1)) * R / static_cast<double>(nx - 1);
  return g;
}

std::string_view to_string(Scheme s) {
  return s == Scheme::mimetic ? "mimetic" : "centered";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "mimetic") return Scheme::mimetic;
  if (name == "centered") return Scheme::centered;
  throw ValidationError("scheme", "unknown scheme '" + std::string(name) + "' (mimetic|centered)");
}

SpatialOps build_spatial_ops(const SpatialGrid& grid, const Potential& p, double gamma, Scheme scheme) {
  if (!(gamma > 0.0)) throw ValidationError("gamma", "must be > 0");
  if (grid.nx < 8 || grid.nodes.size() != grid.nx) throw ValidationError("grid.nx", "grid not initialized");
  const double wl = std::exp(-0.5 * p.V(-grid.R));
  const double wr = std::exp(-0.5 * p.V(grid.R));
  if (!(std::max(wl, wr) < 1e-6))
    throw ValidationError("grid.R", "truncation radius too small (boundary weight e^{-V(R)/2} = " +
                                        std::to_string(std::max(wl, wr)) + " >= 1e-6)");

  const Index n = grid.nx;
  const double h = grid.h;
  const double sg = std::sqrt(gamma);
  SpatialOps ops;
  ops.grid = grid;
  ops.scheme = scheme;
  ops.gamma = gamma;
  ops.hess.resize(n);
  ops.dV.resize(n);
  Vec v(n);
  for (Index i = 0; i < n; ++i) {
    const double x = grid.nodes(i);
    v(i) = p.V(x);
    ops.dV(i) = p.V1(x);
    ops.hess(i) = p.V2(x);
  }

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * n);
  if (scheme == Scheme::mimetic) {
    for (Index i = 0; i + 1 < n; ++i) {
      const double r = std::exp(0.25 * (v(i + 1) - v(i)));
      t.emplace_back(i, i + 1, sg * r / h);
      t.emplace_back(i, i, -sg / (r * h));
    }
  } else {
    const double c = sg / (2.0 * h);
    for (Index i = 0; i < n; ++i) {
      if (i + 1 < n) t.emplace_back(i, i + 1, c);
      if (i > 0) t.emplace_back(i, i - 1, -c);
      t.emplace_back(i, i, 0.5 * sg * ops.dV(i));
    }
  }
  ops.A.resize(n, n);
  ops.A.setFromTriplets(t.begin(), t.end());
  ops.A.makeCompressed();
  ops.Adag = SparseMatrix(ops.A.transpose());
  ops.W = SparseMatrix(ops.Adag * ops.A);
  ops.W.prune(0.0);

  if (scheme == Scheme::mimetic) {
    // Exact kernel: e^{-V/2}, normalized. The eigensolver is not needed.
    ops.phi0 = (-0.5 * v.array()).exp().matrix();
    ops.phi0.normalize();
    ops.lambda0 = (ops.A * ops.phi0).squaredNorm();
  } else {
    GroundState gs = discrete_ground_state(ops);
    ops.phi0 = gs.phi0;
    ops.lambda0 = gs.lambda0;
  }
  return ops;
}

namespace {

struct WittenPairs {
  Vec values;
  Mat vectors;
};

WittenPairs witten_pairs(const SpatialOps& ops, int k) {
  const Index n = ops.grid.nx;
  // W + I is SPD; Lanczos on its inverse gives the bottom of the spectrum.
  const double shift = -1.0;
  SparseMatrix shifted = ops.W - shift * sparse_identity(n);
  SpdSolver solver(shifted);
  LanczosOptions opts;
  opts.tol = 1e-13;
  RitzPairs rp = lanczos([&](const Vec& x) { return solver.apply_inverse(x); }, n, k, Extremity::largest, opts);
  WittenPairs out;
  if (rp.converged) {
    out.vectors = rp.vectors;
  } else if (n <= kDenseCap) {
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(ops.W)};
    out.vectors = es.eigenvectors().leftCols(k);
  } else {
    throw NumericalError("witten eigensolve did not converge (residual " + std::to_string(rp.max_residual) + ")");
  }
  out.values.resize(k);
  for (int i = 0; i < k; ++i) {
    const Vec vi = out.vectors.col(i);
    out.values(i) = (ops.A * vi).squaredNorm() / vi.squaredNorm();
  }
  return out;
}

}  // namespace

GroundState discrete_ground_state(const SpatialOps& ops) {
  WittenPairs wp = witten_pairs(ops, 1);
  GroundState gs;
  gs.lambda0 = wp.values(0);
  gs.phi0 = wp.vectors.col(0).normalized();
  if (gs.phi0.sum() < 0.0) gs.phi0 = -gs.phi0;
  return gs;
}

Vec witten_lowest(const SpatialOps& ops, int k) {
  return witten_pairs(ops, k).values;
}

double witten_gap(const SpatialOps& ops) {
  const Vec lo = witten_lowest(ops, 2);
  return lo(1) - lo(0);
}

double spatial_commutator_defect(const SpatialOps& ops, const Vec& u, double interior_radius) {
  const Vec comm = ops.A * (ops.Adag * u) - ops.Adag * (ops.A * u);
  Vec r = comm - ops.gamma * ops.hess.cwiseProduct(u);
  for (Index i = 0; i < r.size(); ++i)
    if (std::abs(ops.grid.nodes(i)) > interior_radius) r(i) = 0.0;
  return r.norm() / u.norm();
}

}  // namespace hypo
