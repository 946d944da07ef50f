#include <cmath>
#include <set>

#include "abplab/errors.hpp"
#include "abplab/rng.hpp"
#include "abplab/symmat.hpp"
#include "doctest.h"

using namespace abplab;

TEST_SUITE("symmat") {
  TEST_CASE("upper-triangle storage is symmetric") {
    SymMat a(3);
    a.set(0, 2, 5.0);
    CHECK(a(2, 0) == 5.0);
    CHECK(a(0, 2) == 5.0);
    CHECK(a.entries() == 6);
    const auto d = a.dense();
    CHECK(d(2, 0) == d(0, 2));
  }

  TEST_CASE("from_dense takes the symmetric part") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 4, 3;
    const SymMat a = SymMat::from_dense(m);
    CHECK(a(0, 1) == doctest::Approx(3.0));
  }

  TEST_CASE("det, trace and norm of small matrices") {
    const SymMat a(3, {2, 1, 0, 3, 1, 4});  // [[2,1,0],[1,3,1],[0,1,4]]
    CHECK(det(a) == doctest::Approx(18.0));
    CHECK(trace(a) == doctest::Approx(9.0));
    CHECK(frobenius_norm(diag({3, 4})) == doctest::Approx(5.0));
    CHECK(tol_scale(diag({3, 4})) == doctest::Approx(6.0));
  }

  TEST_CASE("Jacobi eigenvalues against the characteristic polynomial") {
    // [[2,1],[1,2]] has eigenvalues 1 and 3.
    const auto s = eigenvalues(SymMat(2, {2, 1, 2}));
    REQUIRE(s.values.size() == 2);
    CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.values[1] == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("eigen decomposition reconstructs the matrix") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SymMat a = random_symmetric(5, seed);
      const auto e = eigen_decompose(a);
      Eigen::VectorXd lam(5);
      for (int i = 0; i < 5; ++i) lam[i] = e.spectrum.values[i];
      const Eigen::MatrixXd back = e.vectors * lam.asDiagonal() * e.vectors.transpose();
      CHECK((back - a.dense()).norm() <= 1e-12 * (1.0 + a.dense().norm()));
      for (int i = 1; i < 5; ++i) CHECK(e.spectrum.values[i - 1] <= e.spectrum.values[i]);
    }
  }

  TEST_CASE("shift moves every eigenvalue") {
    const SymMat a = random_symmetric(4, 7);
    const auto before = eigenvalues(a).values;
    const auto after = eigenvalues(shift(a, 2.5)).values;
    for (int i = 0; i < 4; ++i) CHECK(after[i] == doctest::Approx(before[i] + 2.5).epsilon(1e-12));
  }

  TEST_CASE("psd_clip zeroes negative eigenvalues only") {
    const SymMat c = psd_clip(diag({-1.0, 2.0}));
    CHECK(c(0, 0) == doctest::Approx(0.0));
    CHECK(c(1, 1) == doctest::Approx(2.0));
    CHECK(psd_clip(diag({1, 2})) == diag({1, 2}));
  }

  TEST_CASE("elementary symmetric functions") {
    const std::vector<double> v{1, 2, 3};
    const auto e = elementary_symmetric_all(v);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 6.0);
    CHECK(e[2] == 11.0);
    CHECK(e[3] == 6.0);
    CHECK(elementary_symmetric(v, 2) == 11.0);
    CHECK(binomial(5, 2) == 10.0);
    CHECK(factorial(4) == 24.0);
  }

  TEST_CASE("random PSD styles") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      for (auto style : {PsdStyle::Generic, PsdStyle::LowRank, PsdStyle::NearBoundary}) {
        const SymMat a = random_psd(4, seed, style);
        CHECK(eigenvalues(a).values.front() >= -1e-12 * tol_scale(a));
      }
    }
    // Same seed, same matrix.
    CHECK(random_psd(3, 11, PsdStyle::Generic) == random_psd(3, 11, PsdStyle::Generic));
  }

  TEST_CASE("random orthogonal and conjugation") {
    const Eigen::MatrixXd q = random_orthogonal(4, 3);
    CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
    const SymMat a = random_symmetric(4, 5);
    const auto e1 = eigenvalues(a).values, e2 = eigenvalues(conjugate(a, q)).values;
    for (int i = 0; i < 4; ++i) CHECK(e2[i] == doctest::Approx(e1[i]).epsilon(1e-11));
  }

  TEST_CASE("json round trip is bit exact") {
    const SymMat a = random_symmetric(3, 9);
    nlohmann::json j;
    to_json(j, a);
    CHECK(symmat_from_json(nlohmann::json::parse(j.dump())) == a);
  }

  TEST_CASE("counter rng is deterministic and stream separated") {
    CounterRng a(42, 1), b(42, 1), c(42, 2);
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(a.next_u64());
    CHECK(seen.size() == 1000);
    for (int i = 0; i < 1000; ++i) {
      const double u = a.uniform();
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
    CHECK(stream_id(1, 2) != stream_id(2, 1));
  }

  TEST_CASE("normal samples have unit moments") {
    CounterRng r(5);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
  }
}
