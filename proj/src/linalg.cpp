#include "hypocoerce/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hypo {

namespace {

// Two passes of classical Gram-Schmidt against the first `m` columns.
void reorthogonalize(const Mat& basis, Index m, Vec& w) {
  for (int pass = 0; pass < 2; ++pass) {
    if (m == 0) return;
    const Vec c = basis.leftCols(m).transpose() * w;
    w.noalias() -= basis.leftCols(m) * c;
  }
}

// Eigenvector of the symmetric tridiagonal matrix (d, e) for the eigenvalue
// theta: inverse iteration with a pivoted LU of T - θI (LAPACK gttrf/gtts2).
Vec tridiagonal_eigenvector(const Vec& d, const Vec& e, double theta, double scale) {
  const Index m = d.size();
  Vec z = Vec::Ones(m);
  if (m == 1) return z;
  const double tiny = std::max(scale, 1e-300) * 1e-15;
  Vec dd = d.array() - theta;
  Vec dl = e, du = e, du2 = Vec::Zero(m);
  std::vector<char> swapped(static_cast<std::size_t>(m), 0);
  for (Index i = 0; i + 1 < m; ++i) {
    if (std::abs(dd(i)) >= std::abs(dl(i))) {
      if (dd(i) == 0.0) dd(i) = tiny;
      const double f = dl(i) / dd(i);
      dl(i) = f;
      dd(i + 1) -= f * du(i);
    } else {
      const double f = dd(i) / dl(i);
      dd(i) = dl(i);
      dl(i) = f;
      const double t = du(i);
      du(i) = dd(i + 1);
      dd(i + 1) = t - f * dd(i + 1);
      if (i + 2 < m) {
        du2(i) = du(i + 1);
        du(i + 1) = -f * du(i + 1);
      }
      swapped[static_cast<std::size_t>(i)] = 1;
    }
  }
  if (dd(m - 1) == 0.0) dd(m - 1) = tiny;
  for (Index i = 0; i < m; ++i) z(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  for (int it = 0; it < 3; ++it) {
    for (Index i = 0; i + 1 < m; ++i) {
      if (swapped[static_cast<std::size_t>(i)]) {
        const double t = z(i);
        z(i) = z(i + 1);
        z(i + 1) = t - dl(i) * z(i);
      } else {
        z(i + 1) -= dl(i) * z(i);
      }
    }
    z(m - 1) /= dd(m - 1);
    z(m - 2) = (z(m - 2) - du(m - 2) * z(m - 1)) / dd(m - 2);
    for (Index i = m - 3; i >= 0; --i) z(i) = (z(i) - du(i) * z(i + 1) - du2(i) * z(i + 2)) / dd(i);
    z /= z.norm();
  }
  return z;
}

}  // namespace

RitzPairs lanczos(const LinearMap& op, Index n, int k, Extremity which, const LanczosOptions& opts) {
  if (k < 1 || k > n) throw ValidationError("k", "requested eigenpair count out of range");
  const Index mmax = std::min<Index>(n, std::max(opts.max_iter, k + 1));

  Mat basis(n, std::min<Index>(mmax, 64));  // grown on demand
  std::vector<double> diag;
  std::vector<double> off;  // off[j] couples basis j and j+1
  diag.reserve(mmax);
  off.reserve(mmax);

  std::uint64_t seed = opts.seed;
  Vec q = opts.start.size() == n && opts.start.norm() > 0.0 ? Vec(opts.start.normalized())
                                                           : random_unit_vector(n, seed);
  RitzPairs out;

  auto tridiagonal = [&](Index m) {
    Vec d = Eigen::Map<const Vec>(diag.data(), m);
    Vec e = m > 1 ? Vec(Eigen::Map<const Vec>(off.data(), m - 1)) : Vec(0);
    return std::make_pair(d, e);
  };
  // computeFromTridiagonal does not always return sorted eigenvalues.
  auto sorted_order = [](const Vec& theta) {
    std::vector<Index> order(static_cast<std::size_t>(theta.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index x, Index y) { return theta(x) < theta(y); });
    return order;
  };

  double scale = 0.0;
  for (Index m = 0; m < mmax; ++m) {
    if (m == basis.cols()) basis.conservativeResize(Eigen::NoChange, std::min<Index>(mmax, 2 * m));
    basis.col(m) = q;
    Vec w = op(q);
    const double a = q.dot(w);
    diag.push_back(a);
    reorthogonalize(basis, m + 1, w);
    double beta = w.norm();
    scale = std::max({scale, std::abs(a), beta});

    const Index size = m + 1;
    const bool invariant = beta <= 1e-13 * std::max(scale, 1.0);
    const bool last = size == mmax;
    const Index interval = std::max<Index>(opts.check_every, size / 32);
    if (size >= k && (size % interval == 0 || invariant || last)) {
      // Residual test |β·z_last| from eigenvalues plus inverse iteration
      // (O(m²)); the full tridiagonal eigendecomposition runs only on exit.
      const auto [d, e] = tridiagonal(size);
      Eigen::SelfAdjointEigenSolver<Mat> ev;
      ev.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
      const Vec theta = ev.eigenvalues();
      const std::vector<Index> order = sorted_order(theta);
      auto pick = [&](const std::vector<Index>& ord, int i) {
        return ord[static_cast<std::size_t>(which == Extremity::smallest ? i : size - 1 - i)];
      };
      const double tscale = std::max({scale, theta.cwiseAbs().maxCoeff(), 1e-300});
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        const Vec z = tridiagonal_eigenvector(d, e, theta(pick(order, i)), tscale);
        worst = std::max(worst, std::abs(beta * z(size - 1)));
      }
      const double thresh = opts.tol * tscale;
      if (worst <= thresh || last) {
        Eigen::SelfAdjointEigenSolver<Mat> es;
        es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        const std::vector<Index> full = sorted_order(es.eigenvalues());
        out.values.resize(k);
        out.vectors.resize(n, k);
        double resid = 0.0;
        for (int i = 0; i < k; ++i) {
          const Index idx = pick(full, i);
          out.values(i) = es.eigenvalues()(idx);
          out.vectors.col(i) = (basis.leftCols(size) * es.eigenvectors().col(idx)).normalized();
          resid = std::max(resid, std::abs(beta * es.eigenvectors()(size - 1, idx)));
        }
        out.iterations = static_cast<int>(size);
        out.max_residual = std::max(resid, worst);
        out.converged = worst <= thresh;
        return out;
      }
    }

    if (invariant) {
      // Krylov space exhausted: continue from a fresh direction so that
      // repeated eigenvalues can appear as separate Ritz values.
      off.push_back(0.0);
      for (int attempt = 0; attempt < 8; ++attempt) {
        Vec r = random_unit_vector(n, ++seed + 7919);
        reorthogonalize(basis, size, r);
        if (r.norm() > 1e-8) {
          q = r.normalized();
          break;
        }
      }
    } else {
      off.push_back(beta);
      q = w / beta;
    }
  }
  out.converged = false;
  return out;
}

SpdSolver::SpdSolver(SparseMatrix m) : m_(std::move(m)) {
  ldlt_.compute(m_);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("LDLT factorization failed (matrix not SPD?)");
}

Vec SpdSolver::solve(const Vec& rhs, double rtol) const {
  Vec y = ldlt_.solve(rhs);
  const double target = rtol * rhs.norm();
  Vec r = rhs - m_ * y;
  for (int it = 0; it < 3 && r.norm() > target; ++it) {
    y += ldlt_.solve(r);
    r = rhs - m_ * y;
  }
  if (r.norm() > target)
    throw NumericalError("SPD solve did not reach rtol: relative residual " +
                         std::to_string(r.norm() / std::max(rhs.norm(), 1e-300)));
  return y;
}

Vec SpdSolver::apply_inverse(const Vec& rhs) const {
  Vec y = ldlt_.solve(rhs);
  y += ldlt_.solve(Vec(rhs - m_ * y));
  return y;
}

Mat SpdSolver::solve(const Mat& rhs) const {
  Mat y = ldlt_.solve(rhs);
  y += ldlt_.solve(Mat(rhs - m_ * y));
  return y;
}

SparseMatrix kron(const SparseMatrix& p, const SparseMatrix& q) {
  SparseMatrix out = Eigen::kroneckerProduct(p, q);
  out.prune(0.0);
  out.makeCompressed();
  return out;
}

SparseMatrix sparse_identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix sparse_diagonal(const Vec& d) {
  SparseMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Vec random_gaussian(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

Vec random_unit_vector(Index n, std::uint64_t seed) {
  return random_gaussian(n, seed).normalized();
}

GaussHermite gauss_hermite(int q) {
  if (q < 1) throw ValidationError("quad_order", "must be >= 1");
  Vec d = Vec::Zero(q);
  Vec e(q > 1 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) e(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights = es.eigenvectors().row(0).transpose().array().square();
  gh.weights /= gh.weights.sum();
  return gh;
}

Mat hermite_polynomials(Index nmax, const Vec& x) {
  // p_{k+1} = (x·p_k - √k·p_{k-1}) / √(k+1)
  Mat p(nmax, x.size());
  p.row(0).setOnes();
  if (nmax > 1) p.row(1) = x.transpose();
  for (Index k = 1; k + 1 < nmax; ++k) {
    const double sk = std::sqrt(static_cast<double>(k));
    const double sk1 = std::sqrt(static_cast<double>(k + 1));
    p.row(k + 1) = (x.transpose().array() * p.row(k).array() - sk * p.row(k - 1).array()) / sk1;
  }
  return p;
}

double max_abs(const SparseMatrix& m) {
  double best = 0.0;
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) best = std::max(best, std::abs(it.value()));
  return best;
}

}  // namespace hypo
