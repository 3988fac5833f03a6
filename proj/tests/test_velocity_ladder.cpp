#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hypocoerce/velocity_ladder.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace hypo;

TEST_CASE("nv=3, gamma=1 annihilation matrix") {
  const LadderSet ls = build_ladder(3, 1.0);
  Mat expect = Mat::Zero(3, 3);
  expect(0, 1) = 1.0;
  expect(1, 2) = std::sqrt(2.0);
  CHECK((ls.B - expect).cwiseAbs().maxCoeff() == 0.0);
  const Mat cc = ls.Cdag * ls.C;
  CHECK((cc - Vec(Eigen::Vector3d(0, 1, 1)).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cc - (Mat::Identity(3, 3) - ls.Pi1v)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("number operator by hand") {
  // Bᵀ·B for nv = 3, γ = 4: B(0,1) = 2, B(1,2) = 2√2 → diag(0, 4, 8).
  const LadderSet ls = build_ladder(3, 4.0);
  CHECK(ls.Nop(0, 0) == 0.0);
  CHECK(ls.Nop(1, 1) == 4.0);
  CHECK(ls.Nop(2, 2) == 8.0);
  CHECK((ls.Bdag * ls.B - ls.Nop).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("velocity multiplication") {
  Mat m = velocity_multiplication(build_ladder(2, 1.0));
  CHECK(m(0, 1) == 1.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(m(0, 0) == 0.0);
  m = velocity_multiplication(build_ladder(3, 1.0));
  CHECK(m(0, 1) == doctest::Approx(1.0));
  CHECK(m(1, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.diagonal().cwiseAbs().maxCoeff() == 0.0);
  const Mat m4 = velocity_multiplication(build_ladder(3, 4.0));
  CHECK((m4 - m).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("invalid inputs") {
  try {
    build_ladder(1, 1.0);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "nv");
  }
  CHECK_THROWS_AS(build_ladder(4, 0.0), ValidationError);
  CHECK_THROWS_AS(build_ladder(4, -1.0), ValidationError);
}

TEST_CASE("ladder invariants over nv and gamma") {
  for (Index nv : {2, 8, 32}) {
    for (double g : {0.25, 1.0, 4.0}) {
      CAPTURE(nv);
      CAPTURE(g);
      const LadderSet ls = build_ladder(nv, g);
      CHECK((ls.Bdag - ls.B.transpose()).cwiseAbs().maxCoeff() == 0.0);
      const Mat comm = ls.B * ls.Bdag - ls.Bdag * ls.B;
      for (Index k = 0; k + 1 < nv; ++k) CHECK(std::abs(comm(k, k) - g) <= 1e-12);
      CHECK(comm(nv - 1, nv - 1) == doctest::Approx(-g * (nv - 1)));
      CHECK((ls.B.col(0)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((ls.Cdag * ls.C - (Mat::Identity(nv, nv) - ls.Pi1v)).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK((ls.Pi1v * ls.Pi1v - ls.Pi1v).cwiseAbs().maxCoeff() == 0.0);
      CHECK((ls.Pi1v - ls.Pi1v.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Mat> es(ls.Nop);
      for (Index k = 0; k < nv; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(g * k).epsilon(1e-14));
      if (nv > 1) CHECK(es.eigenvalues()(1) - es.eigenvalues()(0) == doctest::Approx(g));
      for (Index i = 0; i < nv; ++i)
        for (Index j = 0; j < nv; ++j) {
          CHECK((ls.B(i, j) != 0.0) == (ls.C(i, j) != 0.0));
          CHECK((ls.C(i, j) == 0.0 || ls.C(i, j) == 1.0));
          CHECK(ls.Cdag(i, j) == ls.C(j, i));
        }
    }
  }
}

TEST_CASE("B matches b = ∂v + v/2 on Hermite functions (quadrature oracle)") {
  // Hermite functions H_k(v) = p_k(v)·e^{-v²/4}/(2π)^{1/4} tabulated by the
  // three-term recurrence; b applied by central differences; inner products
  // by the trapezoid rule on [-20, 20].
  const int nv = 8;
  const int m = 32001;
  const double L = 20.0, dv = 2 * L / (m - 1);
  std::vector<std::vector<double>> H(nv, std::vector<double>(m));
  for (int j = 0; j < m; ++j) {
    const double v = -L + j * dv;
    const double g = std::exp(-v * v / 4) / std::pow(2 * std::numbers::pi, 0.25);
    double pkm1 = 0.0, pk = 1.0;
    for (int k = 0; k < nv; ++k) {
      H[k][j] = pk * g;
      const double next = (v * pk - std::sqrt(double(k)) * pkm1) / std::sqrt(double(k + 1));
      pkm1 = pk;
      pk = next;
    }
  }
  const LadderSet ls = build_ladder(nv, 1.0);
  for (int k = 0; k < nv; ++k) {
    std::vector<double> bh(m, 0.0);
    for (int j = 1; j + 1 < m; ++j) {
      const double v = -L + j * dv;
      bh[j] = (H[k][j + 1] - H[k][j - 1]) / (2 * dv) + 0.5 * v * H[k][j];
    }
    for (int i = 0; i < nv; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += H[i][j] * bh[j];
      s *= dv;
      CHECK(std::abs(s - ls.B(i, k)) < 1e-5);
    }
  }
}
