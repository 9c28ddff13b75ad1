#include <catch2/catch_amalgamated.hpp>

#include "clab/linalg.hpp"
#include "clab/model.hpp"
#include "clab/rng.hpp"
#include "clab/symplectic.hpp"
#include "test_util.hpp"

using namespace clab;
using testutil::random_complex;
using testutil::random_hermitian;

TEST_CASE("qr_pos identity") {
  CMatrix m = CMatrix::Identity(4, 4);
  QRPair qr = qr_pos(m);
  CHECK(max_abs(CMatrix(qr.Q - m)) < 1e-14);
  CHECK(max_abs(CMatrix(qr.R - m)) < 1e-14);
}

TEST_CASE("qr_pos sign absorbed into Q") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = -2.0;
  m(1, 1) = 1.0;
  QRPair qr = qr_pos(m);
  CHECK(std::abs(qr.Q(0, 0) - Complex(-1, 0)) < 1e-14);
  CHECK(std::abs(qr.Q(1, 1) - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(qr.R(0, 0) - Complex(2, 0)) < 1e-14);
  CHECK(std::abs(qr.R(1, 1) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("qr_pos round trip on a random sample") {
  RngStream rng(derive_seed(11, 0, 0, 0));
  CMatrix m = random_complex(3, 3, rng);
  QRPair qr = qr_pos(m);
  CHECK(max_abs(CMatrix(qr.Q * qr.R - m)) < 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK(qr.R(i, i).imag() == 0.0);
    CHECK(qr.R(i, i).real() > 0.0);
  }
}

TEST_CASE("qr_pos round trip property across sizes") {
  for (int n : {2, 4, 8}) {
    RngStream rng(derive_seed(12, 0, static_cast<std::uint64_t>(n), 0));
    for (int rep = 0; rep < 1000; ++rep) {
      CMatrix m = random_complex(n, n, rng);
      QRPair qr = qr_pos(m);
      REQUIRE(max_abs(CMatrix(qr.Q * qr.R - m)) <= 1e-12 * std::max(1.0, mat_norm(m)));
    }
  }
}

TEST_CASE("singular_values of diagonals and J") {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = Complex(0, 2);
  m(2, 2) = -1.0;
  SingularSpectrum s = singular_values(m);
  CHECK(s.values(0) == Catch::Approx(3.0));
  CHECK(s.values(1) == Catch::Approx(2.0));
  CHECK(s.values(2) == Catch::Approx(1.0));

  SingularSpectrum sj = singular_values(symplectic_form(1));
  CHECK(sj.values(0) == Catch::Approx(1.0));
  CHECK(sj.values(1) == Catch::Approx(1.0));
}

TEST_CASE("singular values of a symplectic sample pair to one") {
  RngStream rng(derive_seed(13, 0, 0, 0));
  for (int n : {1, 2, 3}) {
    DRSChart c;
    c.D = random_complex(n, n, rng);
    c.R = random_hermitian(n, rng);
    c.S = random_hermitian(n, rng);
    if (smallest_singular_value(c.D) < 1e-3) continue;
    CMatrix m = matrix_from_chart(c);
    SingularSpectrum s = singular_values(m);
    const int d = 2 * n;
    for (int j = 0; j < d; ++j)
      CHECK(s.values(j) * s.values(d - 1 - j) == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("singular values of inverse are reciprocals reversed") {
  RngStream rng(derive_seed(14, 0, 0, 0));
  CMatrix m = random_complex(5, 5, rng);
  SingularSpectrum s = singular_values(m);
  SingularSpectrum si = singular_values(inverse(m));
  for (int j = 0; j < 5; ++j)
    CHECK(si.values(j) == Catch::Approx(1.0 / s.values(4 - j)).epsilon(1e-8));
}

TEST_CASE("wedge_norm basics") {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  m(2, 2) = 1.0;
  CHECK(wedge_norm(m, 2) == Catch::Approx(6.0));
  CHECK(wedge_norm(m, 0) == Catch::Approx(1.0));
  CHECK_THROWS_AS(wedge_norm(m, 4), BadOrder);
}

TEST_CASE("wedge_norm bound for unit-determinant matrices") {
  // |log wedge_norm(M, j)| <= j (2N - 1) log||M|| when |det M| = 1
  RngStream rng(derive_seed(15, 0, 0, 0));
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2;
    DRSChart c;
    c.D = random_complex(n, n, rng);
    c.R = random_hermitian(n, rng);
    c.S = random_hermitian(n, rng);
    if (smallest_singular_value(c.D) < 1e-3) continue;
    CMatrix m = matrix_from_chart(c);  // symplectic, so |det| = 1
    double nm = operator_norm(m);
    for (int j = 1; j <= 2 * n; ++j)
      CHECK(std::abs(std::log(wedge_norm(m, j))) <= j * (2 * n - 1) * std::log(nm) + 1e-9);
  }
}

TEST_CASE("wedge_norm multiplicativity on commuting diagonals") {
  RngStream rng(derive_seed(16, 0, 0, 0));
  for (int n : {2, 3, 4}) {
    RVector d1(n), d2(n);
    for (int i = 0; i < n; ++i) {
      d1(i) = 0.2 + rng.next_double();
      d2(i) = 0.2 + rng.next_double();
    }
    CMatrix prod = CMatrix::Zero(n, n);
    std::vector<double> pairwise;
    for (int i = 0; i < n; ++i) {
      prod(i, i) = d1(i) * d2(i);
      pairwise.push_back(d1(i) * d2(i));
    }
    std::sort(pairwise.rbegin(), pairwise.rend());
    for (int j = 1; j <= n; ++j) {
      double expect = 1.0;
      for (int i = 0; i < j; ++i) expect *= pairwise[static_cast<std::size_t>(i)];
      CHECK(wedge_norm(prod, j) == Catch::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("solve basics") {
  CMatrix i2 = CMatrix::Identity(2, 2);
  CMatrix b(2, 1);
  b(0, 0) = Complex(1, 1);
  b(1, 0) = 2.0;
  CHECK(max_abs(CMatrix(solve(i2, b) - b)) < 1e-15);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = Complex(0, 1);
  CMatrix rhs(2, 1);
  rhs(0, 0) = 2.0;
  rhs(1, 0) = Complex(0, 1);
  CMatrix x = solve(d, rhs);
  CHECK(std::abs(x(0, 0) - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(x(1, 0) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("solve residual on a random well-conditioned system") {
  RngStream rng(derive_seed(17, 0, 0, 0));
  CMatrix m = random_complex(6, 6, rng) + 3.0 * CMatrix::Identity(6, 6);
  CMatrix b = random_complex(6, 2, rng);
  SolveReport rep;
  CMatrix x = solve(m, b, &rep);
  CHECK(max_abs(CMatrix(m * x - b)) < 1e-10);
  CHECK_FALSE(rep.ill_conditioned);
}

TEST_CASE("herm_eig basics") {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  EigenSystem es = herm_eig(d);
  CHECK(es.values(0) == Catch::Approx(-1.0));
  CHECK(es.values(1) == Catch::Approx(1.0));

  CMatrix x = CMatrix::Zero(2, 2);
  x(0, 1) = 1.0;
  x(1, 0) = 1.0;
  EigenSystem ex = herm_eig(x);
  CHECK(ex.values(0) == Catch::Approx(-1.0));
  CHECK(ex.values(1) == Catch::Approx(1.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(ex.vectors(0, 0)) - r) < 1e-12);
  CHECK(std::abs(std::abs(ex.vectors(1, 0)) - r) < 1e-12);

  CMatrix nh = CMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(herm_eig(nh), NotHermitian);
}

TEST_CASE("herm_eig on a chiral chain is symmetric about zero") {
  ModelConfig cfg;
  cfg.n_internal = 1;
  cfg.seed = 3;
  cfg.alpha0 = DistributionSpec::diagonal_uniform(1.0, 1.0);
  cfg.alpha1 = DistributionSpec::diagonal_uniform(1.0, 1.0);
  Realization r = sample_realization(cfg, 1, 4, 0);
  FiniteHamiltonian h = assemble_hamiltonian(r);
  EigenSystem es = herm_eig(h.h);
  const Eigen::Index d = es.values.size();
  for (Eigen::Index j = 0; j < d; ++j)
    CHECK(es.values(j) == Catch::Approx(-es.values(d - 1 - j)).margin(1e-12));
}

TEST_CASE("herm_eig trace identity") {
  RngStream rng(derive_seed(18, 0, 0, 0));
  CMatrix m = random_hermitian(6, rng);
  EigenSystem es = herm_eig(m);
  CHECK(es.values.sum() == Catch::Approx(m.trace().real()).margin(1e-9 * (1.0 + mat_norm(m))));
}
