#include <cmath>
#include <numbers>

#include "abplab/abp.hpp"
#include "abplab/errors.hpp"
#include "abplab/potential.hpp"
#include "abplab/suites.hpp"
#include "doctest.h"

using namespace abplab;

namespace {

ClassicalSample quadratic(const std::string& name, const SymMat& a) {
  ClassicalSample s;
  s.name = name;
  s.u = [a](const std::vector<double>& x) { return 0.5 * (a(0, 0) * x[0] * x[0] + 2 * a(0, 1) * x[0] * x[1] + a(1, 1) * x[1] * x[1]); };
  s.grad = [a](const std::vector<double>& x) {
    return std::vector<double>{a(0, 0) * x[0] + a(0, 1) * x[1], a(0, 1) * x[0] + a(1, 1) * x[1]};
  };
  s.hess = [a](const std::vector<double>&) { return a; };
  return s;
}

GridFn box(int n, double lo = -1.0, double hi = 1.0) {
  return GridFn::sample({lo, lo}, {hi, hi}, {n, n}, [](const GridFn::Point&) { return 0.0; });
}

Jet2 jet(const SymMat& a) { return Jet2(0.0, std::vector<double>(a.dim(), 0.0), a); }

}  // namespace

TEST_SUITE("abp") {
  TEST_CASE("right-hand side forms") {
    const auto c = parse_rhs("const:2.5");
    CHECK(c.eval({0.3, 0.4}) == 2.5);
    CHECK(c.lipschitz(10.0) == 0.0);
    const auto g = parse_rhs("gauss:2,0.5,1,0");
    CHECK(g.eval({1.0, 0.0}) == doctest::Approx(2.0));
    CHECK(g.eval({1.5, 0.0}) == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK(g.lipschitz(1.0) == doctest::Approx(4.0 * std::exp(-0.5)));
    const auto p = parse_rhs("poly:1,0,3");
    CHECK(p.eval({1.0, 1.0}) == doctest::Approx(13.0));
    CHECK(p.lipschitz(2.0) == doctest::Approx(4.0 * 3.0 * 8.0));
    for (const std::string bad : {"const:-1", "gauss:1", "gauss:1,0", "poly:", "exp:1", "const:x"})
      CHECK_THROWS_AS(parse_rhs(bad), ArgumentError);
  }

  TEST_CASE("equation spec on a grid") {
    const GridFn grid = box(5);
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "gauss:1,0.5", grid);
    REQUIRE(eq.f_lipschitz.has_value());
    CHECK(*eq.f_lipschitz == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK_FALSE(EquationSpec::on_grid(PolyOperator::det(2), "const:1", grid).f_lipschitz.has_value());
    CHECK_THROWS_AS(EquationSpec::on_grid(PolyOperator::det(3), "const:1", grid), ArgumentError);
    CHECK_THROWS_AS(EquationSpec::on_grid(PolyOperator::det(2), "poly:1,-1", grid), ArgumentError);
  }

  TEST_CASE("fiber membership") {
    const GridFn grid = box(3);
    const auto f0 = EquationSpec::on_grid(PolyOperator::det(2), "const:0", grid);
    const auto f2 = EquationSpec::on_grid(PolyOperator::det(2), "const:2", grid);
    const auto fh = EquationSpec::on_grid(PolyOperator::det(2), "const:0.5", grid);
    const std::vector<double> x{0.0, 0.0};
    CHECK(fiber_contains(f0, x, jet(identity(2))));
    CHECK_FALSE(fiber_contains(f2, x, jet(identity(2))));
    CHECK_FALSE(fiber_contains(f0, x, jet(diag({1, -1}))));
    CHECK(dual_fiber_contains(f0, x, jet(identity(2))));
    CHECK(dual_fiber_contains(f2, x, jet(-1.0 * identity(2))));
    CHECK_FALSE(dual_fiber_contains(fh, x, jet(-1.0 * identity(2))));
    CHECK(super_fiber_contains(f2, x, jet(identity(2))));
    CHECK(super_fiber_contains(fh, x, jet(diag({1, -1}))));
    CHECK_THROWS_AS(Jet2(0.0, {1.0}, identity(2)), ArgumentError);
  }

  TEST_CASE("classical classification follows the fiber definitions") {
    const GridFn grid = box(9);
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", grid);
    for (const auto& f : classify_classical(eq, grid, quadratic("id", identity(2)))) {
      CHECK(f.admissible_sub);
      CHECK(f.super);
      CHECK(f.dual_sub);  // -I is outside the cone
    }
    // det = 4: a subsolution, not a supersolution; -A is outside the cone so
    // the dual condition holds vacuously.
    for (const auto& f : classify_classical(eq, grid, quadratic("two", diag({2, 2})))) {
      CHECK(f.admissible_sub);
      CHECK_FALSE(f.super);
      CHECK(f.dual_sub);
    }
    // A = -I lies outside the cone, so it is not admissible and the
    // supersolution condition holds vacuously; det(-A) = 1 <= 1.
    for (const auto& f : classify_classical(eq, grid, quadratic("neg", -1.0 * identity(2)))) {
      CHECK_FALSE(f.admissible_sub);
      CHECK(f.super);
      CHECK(f.dual_sub);
    }
  }

  TEST_CASE("stencil classification on an exact quadratic") {
    const GridFn u = GridFn::sample({0, 0}, {1, 1}, {17, 17}, [](const GridFn::Point& x) {
      return 0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", u);
    int present = 0;
    for (const auto& f : classify_stencil(eq, u, 5.0 * u.max_spacing())) {
      if (!f) continue;
      ++present;
      CHECK(f->admissible_sub);
      CHECK(f->super);
    }
    CHECK(present == 15 * 15);
  }

  TEST_CASE("delta and eps closed forms") {
    const GridFn grid = box(5);
    auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", grid);
    CHECK(std::isinf(modulus_delta(eq, 0.0, 0.5)));
    eq.f_lipschitz = 1.0;
    CHECK(modulus_delta(eq, 0.0, 0.5) == 0.25);
    auto eq3 = EquationSpec::on_grid(PolyOperator::det(2), "const:1", grid);
    eq3.op = PolyOperator::det(3);
    eq3.f_lipschitz = 10.0;
    CHECK(modulus_delta(eq3, 0.0, 1.0) == doctest::Approx(0.1));
    CHECK(eps_star(0.2, 1.0) == doctest::Approx(0.01));
    CHECK(eps_star(1.0, 0.25) == 1.0);
    CHECK(eps_star(0.4, 0.7) == doctest::Approx(4.0 * eps_star(0.2, 0.7)));
    CHECK_THROWS_AS(eps_star(0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(eps_star(1.0, 0.0), ArgumentError);
  }

  TEST_CASE("pipeline on the concave quadratic") {
    const GridFn w = GridFn::sample({-1, -1}, {1, 1}, {65, 65}, [](const GridFn::Point& x) {
      return -0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", w);
    const auto r = semiconvex_pipeline_check(eq, w);
    CHECK(r.passed);
    CHECK(r.extra["violations"].get<int>() == 0);
    CHECK(r.extra["contact_nodes"].get<int>() > 3000);
    // Constant f: delta is capped at 2h, so eps = h^2 and the discrete
    // sup-convolution leaves w unchanged; -D^2 is (1 - eta) I.
    const double h = w.max_spacing();
    CHECK(r.extra["eps_used"].get<double>() == doctest::Approx(h * h));
    CHECK(r.min_slack == doctest::Approx(1.0 - 0.95 * 0.95).epsilon(1e-9));
  }

  TEST_CASE("pipeline reports the closed-form delta and eps") {
    const GridFn w = GridFn::sample({-1, -1}, {1, 1}, {33, 33}, [](const GridFn::Point& x) {
      return -0.05 * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "gauss:1,0.5", w);
    PipelineOptions opt;
    opt.eta = 0.1;
    const auto r = semiconvex_pipeline_check(eq, w, opt);
    REQUIRE(eq.f_lipschitz.has_value());
    CHECK(*eq.f_lipschitz == doctest::Approx(2.0 * std::exp(-0.5)));
    const double delta = std::pow(0.1, 2) / *eq.f_lipschitz;
    CHECK(r.extra["delta"].get<double>() == delta);
    CHECK(r.extra["M"].get<double>() == doctest::Approx(0.1));
    CHECK(r.extra["eps_star"].get<double>() == delta * delta / (4.0 * r.extra["M"].get<double>()));
    CHECK(r.passed);
  }

  TEST_CASE("pipeline negative control finds the spike") {
    for (const auto& c : pipeline_cases(33)) {
      const auto r = semiconvex_pipeline_check(c.eq, c.w);
      CAPTURE(c.name);
      if (c.spike_node < 0) {
        CHECK(r.passed);
      } else {
        CHECK_FALSE(r.passed);
        CHECK(r.witness["node"].get<int>() == c.spike_node);
      }
    }
  }

  TEST_CASE("oscillation bound on the unit square") {
    const GridFn h = GridFn::sample({0, 0}, {1, 1}, {65, 65}, [](const GridFn::Point& x) {
      return 0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", h);
    const auto b = oscillation_bound_check(eq, h);
    CHECK(b.osc_in == doctest::Approx(0.96875));
    CHECK(b.osc_bd == doctest::Approx(1.0));
    // sqrt(2) / sqrt(pi) * (63^2 / 64^2)^(1/2)
    CHECK(b.error_term == doctest::Approx(0.7854176145403208).epsilon(1e-12));
    CHECK(b.slack == doctest::Approx(0.8166676145403207).epsilon(1e-12));
    const auto c = c11_oscillation_check(eq, h);
    CHECK(c.restricted_term == doctest::Approx(c.error_term));
  }

  TEST_CASE("restricted oscillation term is smaller with a concave region") {
    const GridFn h = GridFn::sample({-1, -1}, {1, 1}, {33, 33}, [](const GridFn::Point& x) {
      return std::cos(2.0 * x[0]) + 0.2 * x[1] * x[1];
    });
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", h);
    const auto b = c11_oscillation_check(eq, h);
    CHECK(b.restricted_term < b.error_term);
    const GridFn aff = GridFn::sample({0, 0}, {1, 1}, {9, 9}, [](const GridFn::Point& x) { return x[0] - 2 * x[1]; });
    const auto z = oscillation_bound_check(EquationSpec::on_grid(PolyOperator::det(2), "const:0", aff), aff);
    CHECK(z.error_term == 0.0);
    // h = 1/8: interior range [1/8 - 14/8, 7/8 - 2/8], boundary range [-2, 1].
    CHECK(z.osc_in == doctest::Approx(2.25));
    CHECK(z.slack == doctest::Approx(0.75));
  }

  TEST_CASE("disk-masked oscillation anchor") {
    const GridFn h = GridFn::sample({-1, -1}, {1, 1}, {129, 129},
                                    [](const GridFn::Point& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); },
                                    DiskMask{0.0, 0.0, 1.0});
    const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", h);
    const auto b = oscillation_bound_check(eq, h);
    CHECK(b.osc_in == doctest::Approx(0.5).epsilon(0.1));
    CHECK(b.osc_bd + b.error_term == doctest::Approx(2.0).epsilon(0.025));
  }

  TEST_CASE("maximum principle") {
    const GridFn grid = box(17);
    const auto det = EquationSpec::on_grid(PolyOperator::det(2), "const:1", grid);
    const auto convex = max_principle_check(det, grid, quadratic("convex", diag({2, 1})));
    CHECK(convex.passed);
    CHECK(convex.slack >= 0.0);
    const auto concave = max_principle_check(det, grid, quadratic("concave", -1.0 * identity(2)));
    CHECK_FALSE(concave.admissible);
    CHECK_FALSE(concave.passed);
    const auto tr = EquationSpec::on_grid(PolyOperator::trace(2), "const:0", grid);
    const auto saddle = max_principle_check(tr, grid, quadratic("saddle", diag({1, -1})));
    CHECK(saddle.passed);
    CHECK(saddle.min_trace == doctest::Approx(0.0).scale(1.0));
    for (const auto& c : max_principle_cases(17)) {
      CAPTURE(c.name);
      const auto r = max_principle_check(c.eq, c.grid, c.u);
      CHECK(r.admissible == c.expect_admissible);
      if (c.expect_admissible) {
        CHECK(r.passed);
        CHECK(r.trace_ok);
      }
    }
  }

  TEST_CASE("solver reproduces half |x|^2") {
    const auto one = [](const std::vector<double>&) { return 1.0; };
    const auto half = [](const std::vector<double>& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    const auto r = solve_ma_2d(one, half, {0, 0}, {1, 1}, {65, 65});
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    double err = 0.0;
    for (int k = 0; k < r.u.size(); ++k) err = std::max(err, std::abs(r.u[k] - half(r.u.coords(k))));
    CHECK(err <= 5e-3);
    const int centre = r.u.index(32, 32);
    CHECK(discrete_operator(PolyOperator::det(2), r.u, centre) == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("solver on |x|^2 with f = 4 and the degenerate case") {
    const auto sq = [](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1]; };
    const auto r = solve_ma_2d([](const std::vector<double>&) { return 4.0; }, sq, {-1, -1}, {1, 1}, {33, 33});
    CHECK(r.converged);
    for (int k = 0; k < r.u.size(); ++k) CHECK(r.u[k] == doctest::Approx(sq(r.u.coords(k))).epsilon(1e-6));

    const auto z = solve_ma_2d([](const std::vector<double>&) { return 0.0; }, sq, {-1, -1}, {1, 1}, {33, 33});
    CHECK(z.converged);
    CHECK(semiconvexity_modulus(z.u) <= 1e-8);
    double worst = 0.0;
    for (int k = 0; k < z.u.size(); ++k)
      if (z.u.is_interior(k)) worst = std::max(worst, discrete_operator(PolyOperator::det(2), z.u, k));
    CHECK(worst <= 1e-8);
  }

  TEST_CASE("trace solver and the experimental path") {
    const auto sq = [](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1]; };
    SolveOptions opt;
    opt.op = PolyOperator::trace(2);
    const auto t = solve_ma_2d([](const std::vector<double>&) { return 4.0; }, sq, {0, 0}, {1, 1}, {17, 17}, opt);
    CHECK(t.converged);
    CHECK(t.u[t.u.index(8, 8)] == doctest::Approx(0.5).epsilon(1e-8));

    SolveOptions s2;
    s2.op = PolyOperator::khessian(2, 2);
    CHECK_THROWS_AS(solve_ma_2d([](const std::vector<double>&) { return 4.0; }, sq, {0, 0}, {1, 1}, {9, 9}, s2),
                    ArgumentError);
    s2.experimental = true;
    s2.tol = 1e-8;
    const auto e = solve_ma_2d([](const std::vector<double>&) { return 4.0; }, sq, {0, 0}, {1, 1}, {9, 9}, s2);
    CHECK(e.converged);
    CHECK(e.u[e.u.index(4, 4)] == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("solver argument checks") {
    const auto one = [](const std::vector<double>&) { return 1.0; };
    CHECK_THROWS_AS(solve_ma_2d(one, one, {0, 0}, {1, 1}, {300, 300}), ArgumentError);
    CHECK_THROWS_AS(solve_ma_2d([](const std::vector<double>&) { return -1.0; }, one, {0, 0}, {1, 1}, {9, 9}),
                    ArgumentError);
    SolveOptions opt;
    opt.max_iter = 1;
    const auto r = solve_ma_2d(one, one, {0, 0}, {1, 1}, {33, 33}, opt);
    CHECK_FALSE(r.converged);
    CHECK_THROWS_AS(require_converged(r), PreconditionError);
    CHECK_NOTHROW(require_converged(r, true));
  }

  TEST_CASE("oscillation bound holds on every solution case") {
    for (const auto& c : solution_cases(33, 65)) {
      CAPTURE(c.name);
      CHECK(c.converged);
      const auto b = oscillation_bound_check(c.eq, c.h);
      CHECK(b.slack >= -5.0 * c.h.max_spacing());
    }
  }
}
