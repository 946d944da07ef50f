#include <cmath>
#include <optional>

#include "abplab/errors.hpp"
#include "abplab/majorization.hpp"
#include "abplab/operators.hpp"
#include "doctest.h"

using namespace abplab;

TEST_SUITE("majorization") {
  TEST_CASE("dm_gap closed forms") {
    CHECK(dm_gap(PolyOperator::det(3), diag({1, 2, 3})) == doctest::Approx(0.0).scale(1.0));
    CHECK(dm_gap(PolyOperator::trace(2), diag({4, 1})) == doctest::Approx(1.0));
    // tr A is pfold with p = n: g(I) = 2, same gap.
    CHECK(dm_gap(PolyOperator::pfold(2, 2), diag({4, 1})) == doctest::Approx(1.0));
    for (const std::string s : {"sigma:k=2,n=3", "pfold:p=2,n=3", "rderiv(det:n=4,l=1)"}) {
      const auto g = parse_operator(s);
      CHECK(std::abs(dm_gap(g, 3.0 * identity(g.dim()))) < 1e-12);
    }
    CHECK_THROWS_AS(dm_gap(PolyOperator::det(2), diag({-1, 1})), PreconditionError);
  }

  TEST_CASE("det sweep is an equality to roundoff") {
    SweepOptions opt;
    opt.samples = 2000;
    for (int n = 2; n <= 5; ++n) {
      const auto r = dm_sweep(PolyOperator::det(n), opt);
      CHECK(r.passed);
      CHECK(r.samples == 2000);
      CHECK(std::abs(r.min_slack) <= 1e-9);
    }
  }

  TEST_CASE("sigma and pfold sweeps with hunting") {
    SweepOptions opt;
    opt.samples = 1000;
    opt.hunt = true;
    opt.hunt_starts = 3;
    opt.hunt_iterations = 50;
    for (const std::string s : {"sigma:k=2,n=3", "sigma:k=3,n=5", "pfold:p=2,n=3", "pfold:p=2,n=4",
                                "prod(det:n=3,sigma:k=2,n=3)", "rderiv(det:n=4,l=1)"}) {
      CAPTURE(s);
      const auto r = dm_sweep(parse_operator(s), opt);
      CHECK(r.passed);
      CHECK(r.min_slack >= -1e-9);
      CHECK(r.extra["hunt_evaluations"].get<long>() > 0);
    }
  }

  TEST_CASE("sweeps are deterministic") {
    SweepOptions opt;
    opt.samples = 300;
    opt.seed = 17;
    const auto a = dm_sweep(PolyOperator::khessian(2, 4), opt).to_json();
    const auto b = dm_sweep(PolyOperator::khessian(2, 4), opt).to_json();
    CHECK(a.dump() == b.dump());
  }

  TEST_CASE("non-central operators are skipped unless waived") {
    const auto corner = PolyOperator::custom("a11", 2, 1, [](const SymMat& a) { return a(0, 0); });
    SweepOptions opt;
    opt.samples = 10;
    const auto r = dm_sweep(corner, opt);
    CHECK_FALSE(r.passed);
    CHECK(r.skipped.find("not I-central") != std::string::npos);
    opt.hunt = true;
    opt.waive_prechecks = true;
    const auto w = dm_sweep(corner, opt);
    CHECK(w.skipped.empty());
    CHECK(w.samples == 10);
  }

  TEST_CASE("Maclaurin gaps") {
    CHECK(maclaurin_gap(diag({1, 4}), 1, 2) == doctest::Approx(0.5));
    CHECK(maclaurin_gap(identity(4), 2, 3) == doctest::Approx(0.0).scale(1.0));
    CHECK(maclaurin_gap(diag({1, 2, 3}), 1, 3) == doctest::Approx(2.0 - std::cbrt(6.0)));
    CHECK_THROWS_AS(maclaurin_gap(identity(3), 3, 2), ArgumentError);
    for (int n = 2; n <= 5; ++n) CHECK(maclaurin_check(n, 300, 3).passed);
  }

  TEST_CASE("monomial basis") {
    const auto b = monomial_basis(2, 3);
    REQUIRE(b.size() == 4);
    CHECK(b.front() == std::vector<int>{3, 0});
    CHECK(b.back() == std::vector<int>{0, 3});
    CHECK(monomial_basis(3, 4).size() == 15);
  }

  TEST_CASE("coefficient expansions at tau = I") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    const auto d = coefficient_expansion(PolyOperator::det(2), id);
    CHECK(d.coefficient({1, 1}) == doctest::Approx(1.0));
    CHECK(std::abs(d.coefficient({2, 0})) < 1e-10);

    // (x1^2 + x2^2) x1 x2
    const auto e = coefficient_expansion(PolyOperator::normsqdet(2), id);
    CHECK(e.degree == 4);
    CHECK(e.coefficient({3, 1}) == doctest::Approx(1.0));
    CHECK(e.coefficient({1, 3}) == doctest::Approx(1.0));
    for (const auto& alpha : {std::vector<int>{4, 0}, {2, 2}, {0, 4}})
      CHECK(std::abs(e.coefficient(alpha)) < 1e-10);
    CHECK(e.fit_residual <= 1e-8);
    CHECK(e.evaluate({2.0, 3.0}) == doctest::Approx(13.0 * 6.0));
  }

  TEST_CASE("trace expansion under any tau") {
    const Eigen::MatrixXd tau = random_orthogonal(3, 8);
    const auto e = coefficient_expansion(PolyOperator::trace(3), tau);
    CHECK(e.coefficient({1, 0, 0}) == doctest::Approx(1.0));
    CHECK(e.coefficient({0, 0, 1}) == doctest::Approx(1.0));
  }

  TEST_CASE("coefficient condition and certificates") {
    std::optional<CoefficientCertificate> cert;
    const auto r = coefficient_condition(PolyOperator::normsqdet(2), 20, 1, 1e-7, &cert);
    CHECK(r.passed);
    REQUIRE(cert.has_value());
    CHECK(cert->op() == "normsqdet:n=2");
    CHECK(cert->central_k() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(coefficient_condition(PolyOperator::det(3), 20, 2).passed);

    const auto g = PolyOperator::normsqdet(2);
    CHECK(std::abs(dm_gap_ng(g, identity(2), *cert)) < 1e-12);
    CHECK(std::abs(dm_gap_ng(g, diag({1, 0}), *cert)) < 1e-12);
    CHECK(dm_gap_ng(g, diag({1, 4}), *cert) ==
          doctest::Approx(std::pow(68.0, 0.25) - std::pow(2.0, 0.25) * 2.0));
    CHECK_THROWS_AS(dm_gap_ng(PolyOperator::normsqdet(3), identity(3), *cert), PreconditionError);

    SweepOptions opt;
    opt.samples = 2000;
    CHECK(dm_sweep_ng(g, *cert, opt).passed);
  }

  TEST_CASE("negative coefficient probe fails with a witness") {
    // det(A) - tr(A)^2 / 8: the x1^2 coefficient at tau = I is -1/8.
    const auto probe = PolyOperator::custom(
        "probe", 2, 2, [](const SymMat& a) { return det(a) - trace(a) * trace(a) / 8.0; });
    std::optional<CoefficientCertificate> cert;
    const auto r = coefficient_condition(probe, 5, 1, 1e-7, &cert);
    CHECK_FALSE(r.passed);
    CHECK_FALSE(cert.has_value());
    CHECK(r.min_slack < -0.1);
    CHECK(r.witness.contains("monomial"));
  }
}
