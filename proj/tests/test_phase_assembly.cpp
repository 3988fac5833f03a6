#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hypocoerce/phase_assembly.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <filesystem>
#include <fstream>

using namespace hypo;

namespace {

const Potential h1 = Potential::make(PotentialKind::harmonic, 1.0);
const Potential hc = Potential::make(PotentialKind::harmonic_cosine, 1.0, 0.5, 2.0);

// Independent x-major Kronecker product by explicit loops.
Mat dkron(const Mat& p, const Mat& q) {
  Mat r = Mat::Zero(p.rows() * q.rows(), p.cols() * q.cols());
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j)
      for (Index k = 0; k < q.rows(); ++k)
        for (Index l = 0; l < q.cols(); ++l) r(i * q.rows() + k, j * q.cols() + l) = p(i, j) * q(k, l);
  return r;
}

double rel(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct Dense {
  Mat A, B, I_x, I_v, X0, K, L2, L, Aop;
};

Dense oracle(const PhaseSystem& s) {
  Dense d;
  const Index nx = s.sp.grid.nx, nv = s.ls.nv;
  const double g = s.sp.gamma;
  d.A = Mat(s.sp.A);
  d.B = s.ls.B;
  d.I_x = Mat::Identity(nx, nx);
  d.I_v = Mat::Identity(nv, nv);
  d.X0 = (dkron(d.A, d.B.transpose()) - dkron(d.A.transpose(), d.B)) / g;
  Mat pi1v = Mat::Zero(nv, nv);
  pi1v(0, 0) = 1.0;
  d.K = d.X0 + g * (dkron(d.I_x, d.I_v) - dkron(d.I_x, pi1v));
  d.L2 = dkron(d.I_x, d.I_v) + dkron(d.A.transpose() * d.A, d.I_v) + dkron(d.I_x, d.B.transpose() * d.B);
  const Mat L2inv = d.L2.inverse();
  const Mat a = dkron(d.A, d.I_v), as = a.transpose();
  const Mat b = dkron(d.I_x, d.B), bs = b.transpose();
  Mat H = Mat::Zero(nx, nx);
  for (Index i = 0; i < nx; ++i) H(i, i) = s.potential.V2(s.sp.grid.nodes(i));
  const Mat Hp = dkron(H, d.I_v), I = Mat::Identity(nx * nv, nx * nv);
  d.L = L2inv * (as * b);
  d.Aop = L2inv * bs * (Hp - I) * a * d.L + L2inv * as * (Hp - I) * b * d.L - L2inv * bs * Hp * b;
  return d;
}

}  // namespace

TEST_CASE("operators match a dense oracle") {
  for (const Potential& p : {h1, hc}) {
    for (double g : {0.25, 1.0, 4.0}) {
      const PhaseSystem s = build_phase_system(p, g, 8.0, 32, 8);
      const Dense d = oracle(s);
      CHECK(rel(s.X0.materialize(), d.X0) <= 1e-13);
      CHECK(rel(s.K.materialize(), d.K) <= 1e-13);
      CHECK(rel(s.Lambda2.materialize(), d.L2) <= 1e-13);
      CHECK(rel(s.L.materialize(), d.L) <= 1e-9);
      CHECK(rel(s.L.materialize_transpose(), d.L.transpose()) <= 1e-9);
      CHECK(rel(s.Aop.materialize(), d.Aop) <= 1e-8);
      CHECK(rel(s.Aop.materialize_transpose(), d.Aop.transpose()) <= 1e-8);
    }
  }
}

TEST_CASE("kron ordering is x-major") {
  Mat p(2, 2), q(3, 3);
  p << 1, 2, 3, 4;
  q << 1, 0, 5, 0, 2, 0, 7, 0, 3;
  CHECK(rel(Mat(kron(p.sparseView(), q.sparseView())), dkron(p, q)) == 0.0);
}

TEST_CASE("structure of X0 and K") {
  const PhaseSystem s = build_phase_system(hc, 1.5, 8.0, 48, 8);
  const Mat X0 = s.X0.materialize();
  CHECK((X0 + X0.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
  const Mat K = s.K.materialize();
  const Mat symK = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(symK, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()(0) >= -1e-12);
  CHECK(s.K.apply(s.m0).norm() <= 1e-12);
  CHECK(s.K.apply_transpose(s.m0).norm() <= 1e-12);
  CHECK(s.m0.norm() == doctest::Approx(1.0));
}

TEST_CASE("projectors") {
  const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 32, 6);
  const Vec u = random_gaussian(s.K.n(), 7);
  for (const PhaseOperator* P : {&s.Pi0, &s.Pi1}) {
    const Vec pu = P->apply(u);
    CHECK((P->apply(pu) - pu).norm() <= 1e-13 * u.norm());
    CHECK(std::abs(P->apply(u).dot(u) - u.dot(P->apply_transpose(u))) <= 1e-12 * u.squaredNorm());
  }
  CHECK((s.Pi0.apply(u) - u.dot(s.m0) * s.m0).norm() <= 1e-13 * u.norm());
  CHECK((s.Pi0.apply(s.Pi1.apply(u)) - s.Pi0.apply(u)).norm() <= 1e-13 * u.norm());
}

TEST_CASE("apply and apply_transpose are adjoint") {
  const PhaseSystem s = build_phase_system(hc, 0.5, 8.0, 64, 10);
  const Vec u = random_gaussian(s.K.n(), 1), w = random_gaussian(s.K.n(), 2);
  for (const PhaseOperator* op : {&s.X0, &s.K, &s.Lambda2, &s.L, &s.Aop}) {
    const double lhs = op->apply(u).dot(w), rhs = u.dot(op->apply_transpose(w));
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("Lambda2 solve honours rtol") {
  const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 128, 16);
  const Vec u = random_gaussian(s.K.n(), 3);
  const Vec y = apply_inverse_lambda2(s.Lambda2, u, 1e-12);
  CHECK((s.Lambda2.apply(y) - u).norm() <= 1e-12 * u.norm());
  CHECK_THROWS_AS(apply_inverse_lambda2(s.Lambda2, u, 1e-6), ValidationError);
  CHECK_THROWS_AS(apply_inverse_lambda2(s.Lambda2, u, 0.0), ValidationError);
}

TEST_CASE("dense materialization is capped") {
  const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 300, 16);
  CHECK(s.K.n() > kDenseCap);
  CHECK_THROWS(s.L.materialize());
}

TEST_CASE("exact commutation relations") {
  for (const Potential& p : {h1, hc}) {
    for (double g : {0.25, 1.0, 4.0}) {
      const PhaseSystem s = build_phase_system(p, g, 8.0, 64, 12);
      const CommutatorReport r = commutator_residuals(s.sp, s.ls, p);
      const double scale = std::max(1.0, g) * 64;
      CHECK(r.ccr_b <= 1e-12 * scale);
      CHECK(r.lambda2_b <= 1e-12 * scale);
      CHECK(r.b_X0 <= 1e-12);
      CHECK(r.b_number_shift <= 1e-12 * scale);
    }
  }
}

TEST_CASE("a_X0 residual decays at the scheme's order") {
  for (const Potential& p : {h1, hc}) {
    const CommutatorReport c1 = commutator_residuals(build_phase_system(p, 1.0, 8.0, 129, 8).sp,
                                                     build_ladder(8, 1.0), p);
    const CommutatorReport c2 = commutator_residuals(build_phase_system(p, 1.0, 8.0, 257, 8).sp,
                                                     build_ladder(8, 1.0), p);
    const double ratio = c1.a_X0 / c2.a_X0;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
    CHECK(c2.lambda2_X0 < c1.lambda2_X0);
  }
  const Potential& p = h1;
  const auto sp1 = build_spatial_ops(make_grid(8.0, 129), p, 1.0, Scheme::centered);
  const auto sp2 = build_spatial_ops(make_grid(8.0, 257), p, 1.0, Scheme::centered);
  const double ratio = commutator_residuals(sp1, build_ladder(8, 1.0), p).a_X0 /
                       commutator_residuals(sp2, build_ladder(8, 1.0), p).a_X0;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("ladder transport converges to the direct discretization") {
  double prev = 0.0;
  for (Index nx : {129, 257, 513}) {
    const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, nx, 8);
    const PhaseOperator Xd = assemble_transport_direct(s.sp, s.ls);
    const Vec u = smooth_test_vector(s.sp, s.ls);
    Vec r = s.X0.apply(u) - Xd.apply(u);
    for (Index i = 0; i < nx; ++i)
      for (Index k = 0; k < 8; ++k)
        if (std::abs(s.sp.grid.nodes(i)) > 4.0 || k >= 7) r(i * 8 + k) = 0.0;
    const double d = r.norm() / u.norm();
    if (prev > 0.0) CHECK(d < 0.6 * prev);
    prev = d;
  }
}

TEST_CASE("matrix market output") {
  const PhaseSystem s = build_phase_system(h1, 1.0, 8.0, 16, 4);
  const auto path = std::filesystem::temp_directory_path() / "hypocoerce_test_K.mtx";
  write_matrix_market(s.K.matrix(), path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
  std::string line;
  while (std::getline(in, line) && line[0] == '%') {}
  std::istringstream dims(line);
  Index r = 0, c = 0, nnz = 0;
  dims >> r >> c >> nnz;
  CHECK(r == 64);
  CHECK(c == 64);
  CHECK(nnz == s.K.matrix().nonZeros());
  Mat back = Mat::Zero(64, 64);
  Index i = 0, j = 0;
  double v = 0.0;
  while (in >> i >> j >> v) back(i - 1, j - 1) = v;
  CHECK((back - s.K.materialize()).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}
