// Acceptance checks: one PASS/FAIL line per criterion. Exit status is
// non-zero only when a criterion fails that is not listed as blocked.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "abplab/abp.hpp"
#include "abplab/majorization.hpp"
#include "abplab/operators.hpp"
#include "abplab/potential.hpp"
#include "abplab/rng.hpp"
#include "abplab/suites.hpp"
#include "abplab/symmat.hpp"
#include "oracles.hpp"

using namespace abplab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Criteria whose literal statement cannot hold for the implemented operator
// definitions; they still run and print FAIL.
const std::map<int, std::string> kBlocked = {
    {4,
     "pfold:p=2,n=3 on diag(1,2,3) is prod over pairs of (l_i + l_j), so t -> g(tI + A) has roots "
     "-(l_i + l_j)/2 and the Garding eigenvalues are {1.5, 2, 2.5}; {3, 4, 5} are the pair sums, "
     "i.e. eigenvalues of the induced operator, which differ by the factor p"},
};

// 1. det majorization is an equality.
Outcome majorize_det() {
  const auto t0 = Clock::now();
  SweepOptions opt;
  opt.samples = 10000;
  double worst = 0.0;
  bool ok = true;
  for (int n = 2; n <= 5; ++n) {
    const auto r = dm_sweep(PolyOperator::det(n), opt);
    ok = ok && r.skipped.empty() && r.samples == 10000;
    worst = std::max(worst, std::abs(r.min_slack));
  }
  const double t = seconds_since(t0);
  return {ok && worst <= 1e-9 && t < 30.0, "max |min_slack| = " + fmt(worst) + ", " + fmt(t) + " s"};
}

// 2. majorization positivity with hunting.
Outcome majorize_family() {
  const auto t0 = Clock::now();
  std::vector<PolyOperator> ops;
  for (int n = 1; n <= 5; ++n)
    for (int k = 1; k <= n; ++k) ops.push_back(PolyOperator::khessian(k, n));
  for (int n = 1; n <= 4; ++n)
    for (int p = 1; p <= n; ++p) ops.push_back(PolyOperator::pfold(p, n));
  for (int n = 1; n <= 4; ++n)
    for (int k = 1; k <= n; ++k) ops.push_back(PolyOperator::product(PolyOperator::det(n), PolyOperator::khessian(k, n)));
  for (int n = 2; n <= 4; ++n)
    for (int l = 1; l < n; ++l) ops.push_back(PolyOperator::radial_derivative(PolyOperator::det(n), l));
  SweepOptions opt;
  opt.samples = 10000;
  opt.hunt = true;
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_op, problem;
  for (const auto& g : ops) {
    const auto r = dm_sweep(g, opt);
    if (!r.skipped.empty()) problem += " " + g.spec() + " skipped (" + r.skipped + ")";
    if (r.min_slack < worst) worst = r.min_slack, worst_op = g.spec();
  }
  const double t = seconds_since(t0);
  return {problem.empty() && worst >= -1e-9 && t < 300.0,
          std::to_string(ops.size()) + " operators, min_slack = " + fmt(worst) + " (" + worst_op + "), " + fmt(t) +
              " s" + problem};
}

// 3. I-centrality constants.
Outcome centrality() {
  double det_dev = 0.0, nsd_dev = 0.0;
  bool ok = true;
  for (int n = 2; n <= 5; ++n) {
    const auto k = is_I_central(PolyOperator::det(n));
    ok = ok && k.has_value();
    if (k) det_dev = std::max(det_dev, std::abs(*k - 1.0));
  }
  for (int n = 2; n <= 4; ++n) {
    const auto k = is_I_central(PolyOperator::normsqdet(n));
    ok = ok && k.has_value();
    if (k) nsd_dev = std::max(nsd_dev, std::abs(*k - (2.0 + n)));
  }
  return {ok && det_dev <= 1e-6 && nsd_dev <= 1e-5,
          "det |k - 1| = " + fmt(det_dev) + ", normsqdet |k - (2+n)| = " + fmt(nsd_dev)};
}

// 4. Garding spectrum anchors.
Outcome garding_anchors() {
  double det_err = 0.0;
  for (int n = 2; n <= 5; ++n)
    for (std::uint64_t s = 0; s < 200; ++s) {
      const SymMat a = random_symmetric(n, 1000 * n + s);
      const auto spec = garding_eigenvalues(PolyOperator::det(n), a);
      // Eigen's tridiagonal QR, independent of the library's Jacobi sweep.
      const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.dense()).eigenvalues();
      if (!spec) {
        det_err = std::numeric_limits<double>::infinity();
        continue;
      }
      for (int i = 0; i < n; ++i)
        det_err = std::max(det_err, std::abs(spec.value().values[i] - eig[i]) / (1.0 + spectral_radius(a)));
    }
  const auto pf = garding_eigenvalues(PolyOperator::pfold(2, 3), diag({1, 2, 3}));
  const std::vector<double> want{3, 4, 5};
  double pf_err = std::numeric_limits<double>::infinity();
  std::string got;
  if (pf) {
    pf_err = 0.0;
    for (int i = 0; i < 3; ++i) {
      pf_err = std::max(pf_err, std::abs(pf.value().values[i] - want[i]));
      got += (i ? ", " : "") + fmt(pf.value().values[i]);
    }
  }
  const bool nsd_rejected = !garding_eigenvalues(PolyOperator::normsqdet(2), diag({1, -1})).ok();
  return {det_err <= 1e-8 && pf_err <= 1e-8 && nsd_rejected,
          "det error " + fmt(det_err) + "; pfold diag(1,2,3) -> {" + got + "} vs {3, 4, 5}; normsqdet diag(1,-1) " +
              (nsd_rejected ? "NotHyperbolicAt" : "accepted")};
}

// 5. rderiv(det, l) = l! sigma_{n-l}, with sigma_k as the sum of k x k
// principal minors.
Outcome radial_identity() {
  double worst = 0.0;
  long count = 0;
  for (int n = 2; n <= 5; ++n)
    for (int l = 1; l < n; ++l) {
      const auto g = PolyOperator::radial_derivative(PolyOperator::det(n), l);
      for (std::uint64_t s = 0; s < 1000; ++s) {
        const SymMat a = random_symmetric(n, 77000 + 10 * n + s * 100 + l);
        const double want = factorial(l) * oracle::principal_minor_sum(a, n - l);
        const double scale = std::pow(1.0 + spectral_radius(a), n - l);
        worst = std::max(worst, std::abs(g.evaluate(a) - want) / scale);
        ++count;
      }
    }
  return {worst <= 1e-8, std::to_string(count) + " evaluations, max scaled error " + fmt(worst)};
}

// 6. coefficient condition for the norm-squared determinant.
Outcome coefficient_condition_check() {
  const auto t0 = Clock::now();
  double min_slack = std::numeric_limits<double>::infinity(), fit = 0.0;
  bool ok = true;
  for (int n = 2; n <= 3; ++n) {
    const auto r = coefficient_condition(PolyOperator::normsqdet(n), 100, 1);
    ok = ok && r.skipped.empty() && r.samples == 101;
    min_slack = std::min(min_slack, r.min_slack);
    fit = std::max(fit, r.extra.value("max_fit_residual", std::numeric_limits<double>::infinity()));
  }
  const double t = seconds_since(t0);
  return {ok && min_slack >= -1e-7 && fit <= 1e-8 && t < 120.0,
          "min coefficient " + fmt(min_slack) + ", max fit_residual " + fmt(fit) + ", " + fmt(t) + " s"};
}

// 7. hull contact set vs the gradient-search oracle.
Outcome contact_oracle() {
  int agree = 0, total = 0, contacts = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    CounterRng rng(seed, 0xACCE);
    const double bend = static_cast<double>(seed % 4);
    const GridFn u = GridFn::sample({-1, -1}, {1, 1}, {21, 21}, [&](const GridFn::Point& x) {
      return rng.uniform(-1.0, 1.0) * (seed % 2 ? 1.0 : 0.1) - bend * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto mask = upper_contact_set(u);
    contacts += mask.count();
    agree += std::vector<char>(mask.flag.begin(), mask.flag.end()) == oracle::upper_contact_flags(u, mask.tolerance);
    ++total;
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " grids identical (" +
                              std::to_string(contacts) + " contact nodes)"};
}

// 8. sup-convolution closed form, monotonicity and semiconvexity.
Outcome sup_convolution_check() {
  const GridFn w = GridFn::sample({-1, -1}, {1, 1}, {65, 65},
                                  [](const GridFn::Point& x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); });
  const double h = w.max_spacing();
  bool ok = true;
  std::string detail;
  for (double eps : {0.1, 1.0}) {
    const GridFn s = sup_convolution(w, eps);
    double dev = 0.0;
    for (int k = 0; k < s.size(); ++k) {
      const auto x = s.coords(k);
      dev = std::max(dev, std::abs(s[k] + (x[0] * x[0] + x[1] * x[1]) / (2.0 * (1.0 + eps))));
    }
    ok = ok && dev <= h * h / eps + 1e-10;
    detail += "eps " + fmt(eps) + " deviation " + fmt(dev) + "; ";
  }
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng(seed, 0x5C);
    const GridFn u = GridFn::sample({-1, -1}, {1, 1}, {21, 21}, [&](const GridFn::Point&) { return rng.uniform(-1.0, 1.0); });
    const double e1 = 0.02, e2 = 0.2;
    const GridFn a = sup_convolution(u, e1), b = sup_convolution(u, e2);
    bool mono = true;
    for (int k = 0; k < u.size(); ++k) mono = mono && u[k] <= a[k] && a[k] <= b[k];
    good += mono && semiconvexity_modulus(a) <= 1.0 / e1 + 1e-9 && semiconvexity_modulus(b) <= 1.0 / e2 + 1e-9;
  }
  return {ok && good == 100, detail + std::to_string(good) + "/100 random grids monotone and semiconvex"};
}

// 9. discrete Alexandrov estimate.
Outcome alexandrov() {
  double neg[2] = {0.0, 0.0}, worst_rel = -std::numeric_limits<double>::infinity();
  bool ok = true;
  std::string anchor;
  const int shapes[2] = {65, 129};
  for (int i = 0; i < 2; ++i) {
    for (const auto& c : alexandrov_cases(shapes[i])) {
      const auto r = alexandrov_check(c.u);
      const double h = c.u.max_spacing();
      ok = ok && r.slack >= -5.0 * h;
      worst_rel = std::max(worst_rel, -r.slack / h);
      neg[i] = std::max(neg[i], std::max(0.0, -r.slack));
      if (c.u.dim() == 1) {
        ok = ok && std::abs(r.lhs - 1.0) <= 1e-12 && std::abs(r.rhs - 4.0) <= 4.0 * h;
        anchor += "h=" + fmt(h) + ": lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs) + "; ";
      }
    }
  }
  // Halving h must at least halve the negative part, up to a 20% margin.
  const bool linear = neg[1] <= 1e-12 || neg[1] <= 0.6 * neg[0];
  return {ok && linear, anchor + "negative part " + fmt(neg[0]) + " -> " + fmt(neg[1]) +
                            ", worst -slack/h " + fmt(worst_rel)};
}

// 10. solver anchor.
Outcome solver_anchor() {
  const auto t0 = Clock::now();
  const auto half = [](const std::vector<double>& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
  const auto r = solve_ma_2d([](const std::vector<double>&) { return 1.0; }, half, {0, 0}, {1, 1}, {65, 65});
  const double t = seconds_since(t0);
  double err = 0.0;
  for (int k = 0; k < r.u.size(); ++k) err = std::max(err, std::abs(r.u[k] - half(r.u.coords(k))));
  const auto eq = EquationSpec::on_grid(PolyOperator::det(2), "const:1", r.u);
  int interior = 0, admissible = 0;
  const auto flags = classify_stencil(eq, r.u, 5.0 * r.u.max_spacing());
  for (int k = 0; k < r.u.size(); ++k) {
    if (!r.u.is_interior(k)) continue;
    ++interior;
    admissible += flags[k] && flags[k]->admissible_sub;
  }
  const double frac = static_cast<double>(admissible) / interior;
  return {r.converged && err <= 5e-3 && r.residual <= 1e-8 && frac >= 0.99 && t < 120.0,
          "error " + fmt(err) + ", residual " + fmt(r.residual) + ", admissible " + fmt(100 * frac) + "%, " + fmt(t) +
              " s"};
}

// 11. oscillation bound.
Outcome oscillation() {
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  std::string disk;
  for (const auto& c : solution_cases(65, 129)) {
    ok = ok && c.converged;
    const auto b = oscillation_bound_check(c.eq, c.h);
    const double h = c.h.max_spacing();
    ok = ok && b.slack >= -5.0 * h;
    worst = std::min(worst, b.slack / h);
    if (c.h.mask()) {
      const double bound = b.osc_bd + b.error_term;
      ok = ok && std::abs(b.osc_in - 0.5) <= 0.05 && std::abs(bound - 2.0) <= 0.05 && b.osc_in <= bound;
      disk = "disk osc_in " + fmt(b.osc_in) + " <= bound " + fmt(bound) + "; ";
    }
  }
  ok = ok && !disk.empty();
  return {ok, disk + "min slack/h " + fmt(worst)};
}

// 12. semiconvex pipeline.
Outcome pipeline() {
  bool ok = true;
  std::string detail;
  int cases = 0;
  for (const auto& c : pipeline_cases(65)) {
    const PipelineOptions opt;
    const auto r = semiconvex_pipeline_check(c.eq, c.w, opt);
    ++cases;
    if (c.spike_node >= 0) {
      const bool caught = !r.passed && r.witness.is_object() && r.witness.value("node", -1) == c.spike_node;
      ok = ok && caught;
      detail += std::string("spike ") + (caught ? "caught at node " : "missed, witness ") + r.witness.dump() + "; ";
      continue;
    }
    ok = ok && r.passed && r.extra.value("violations", -1) == 0;
    if (c.eq.f_lipschitz && *c.eq.f_lipschitz > 0) {
      const double delta = std::pow(opt.eta, c.eq.op.degree()) / *c.eq.f_lipschitz;
      const double m = r.extra["M"].get<double>();
      const bool exact = r.extra["delta"].is_number() && r.extra["delta"].get<double>() == delta &&
                         r.extra["eps_star"].is_number() &&
                         r.extra["eps_star"].get<double>() == delta * delta / (4.0 * m);
      ok = ok && exact;
      detail += c.name + (exact ? " delta/eps exact; " : " delta/eps mismatch; ");
    }
  }
  return {ok, std::to_string(cases) + " cases; " + detail};
}

// 13. maximum principle.
Outcome max_principle() {
  bool ok = true;
  int admissible = 0, rejected = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : max_principle_cases(65)) {
    const auto r = max_principle_check(c.eq, c.grid, c.u);
    if (r.admissible) {
      ++admissible;
      ok = ok && r.slack >= -1e-9 && r.trace_ok && r.min_trace >= 0.0;
      worst = std::min(worst, r.slack);
    } else {
      ++rejected;
    }
    ok = ok && r.admissible == c.expect_admissible;
  }
  return {ok && admissible > 0, std::to_string(admissible) + " admissible samples, min slack " + fmt(worst) + ", " +
                                    std::to_string(rejected) + " non-admissible controls rejected"};
}

// 14. determinism of the full default configuration.
Outcome determinism() {
  const auto t0 = Clock::now();
  const RunConfig cfg = parse_config(default_config_text());
  const std::string a = report_json_text(run_all(cfg));
  const std::string b = report_json_text(run_all(cfg));
  return {a == b && cfg.suites.size() == suite_names().size(),
          std::to_string(cfg.suites.size()) + " suites, " + std::to_string(a.size()) + " bytes, " +
              (a == b ? "identical" : "different") + ", " + fmt(seconds_since(t0)) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"det majorization equality", majorize_det},
      {"majorization positivity", majorize_family},
      {"I-centrality constants", centrality},
      {"Garding spectrum anchors", garding_anchors},
      {"radial derivative identity", radial_identity},
      {"coefficient condition", coefficient_condition_check},
      {"contact set oracle", contact_oracle},
      {"sup-convolution", sup_convolution_check},
      {"discrete Alexandrov", alexandrov},
      {"solver anchor", solver_anchor},
      {"oscillation bound", oscillation},
      {"semiconvex pipeline", pipeline},
      {"maximum principle", max_principle},
      {"determinism", determinism},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const auto blocked = kBlocked.find(id);
    std::string line = (o.passed ? "PASS " : "FAIL ") + std::to_string(id) + " " + criteria[i].first + ": " + o.detail;
    if (!o.passed && blocked != kBlocked.end()) line += " [blocked: " + blocked->second + "]";
    else if (!o.passed) ++unexpected;
    std::cout << line << std::endl;
  }
  std::cout << (unexpected == 0 ? "acceptance: no unexpected failures" : "acceptance: unexpected failures") << '\n';
  return unexpected == 0 ? 0 : 1;
}
