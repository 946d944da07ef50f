#include "abplab/majorization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "abplab/rng.hpp"

namespace abplab {

namespace {

constexpr double kMajorizeTol = 1e-9;
constexpr double kPsdSlack = 1e-6;
constexpr double kRootBand = 1e-10;
constexpr double kBasisGuard = 1e4;
constexpr double kFitAudit = 1e-8;

nlohmann::json mat_json(const SymMat& a) {
  nlohmann::json j;
  to_json(j, a);
  return j;
}

double gap_impl(const PolyOperator& g, const SymMat& a) {
  if (a.dim() != g.dim()) throw ArgumentError("dm_gap: dimension mismatch");
  const double scale = tol_scale(a);
  const auto lam = eigenvalues(a).values;
  if (lam.front() < -kPsdSlack * scale) {
    throw PreconditionError("dm_gap: matrix is not positive semidefinite (min eigenvalue " +
                            std::to_string(lam.front()) + ")");
  }
  const int N = g.degree();
  const int n = g.dim();
  // Orthogonally invariant operators are evaluated on the clipped spectrum,
  // so g(A) and det(A) see the same eigenvalues; near-singular samples
  // otherwise leave roundoff of order eps^(1/n) in the gap.
  double ga, d;
  if (g.orthogonally_invariant()) {
    std::vector<double> clipped(lam);
    for (double& v : clipped) v = std::max(v, 0.0);
    ga = g.evaluate(diag(clipped));
    d = 1.0;
    for (double v : clipped) d *= v;
  } else {
    const SymMat b = lam.front() < 0.0 ? psd_clip(a) : a;
    ga = g.evaluate(b);
    d = std::max(det(b), 0.0);
  }
  double root;
  if (ga >= 0.0) {
    root = std::pow(ga, 1.0 / N);
  } else if (ga >= -kRootBand * std::pow(scale, N)) {
    root = 0.0;
  } else {
    root = -std::pow(-ga, 1.0 / N);
  }
  return root - std::pow(g.value_at_identity(), 1.0 / N) * std::pow(d, 1.0 / n);
}

using Objective = std::function<double(const SymMat&)>;

struct Start {
  double slack;
  long index;
  SymMat a;
};

// Projected coordinate descent on the upper-triangle coordinates.
void hunt_from(const Start& s, const Objective& obj, int iterations, SlackTracker& tr, long& evals) {
  SymMat x = s.a;
  double fx = s.slack;
  double step = 0.1 * tol_scale(x);
  for (int it = 0; it < iterations; ++it) {
    bool improved = false;
    for (int k = 0; k < x.entries() && !improved; ++k) {
      for (double sign : {1.0, -1.0}) {
        SymMat y = x;
        y.set_coord(k, x.coord(k) + sign * step);
        y = psd_clip(y);
        double fy;
        try {
          fy = obj(y);
          ++evals;
        } catch (const std::exception&) {
          continue;
        }
        if (fy < fx) {
          x = y;
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (improved) {
      tr.offer(fx, {{"A", mat_json(x)}, {"hunt_start", s.index}, {"iteration", it}});
    } else {
      step *= 0.5;
      if (step < 1e-12 * tol_scale(x)) break;
    }
  }
}

CheckReport sweep(const PolyOperator& g, const SweepOptions& opt, const Objective& gap,
                  CheckReport r) {
  const auto t0 = std::chrono::steady_clock::now();
  r.op = g.spec();
  r.params = {{"samples", opt.samples}, {"seed", opt.seed}, {"hunt", opt.hunt}};
  r.tolerance = kMajorizeTol;
  r.scale_note = "dm_gap / (1 + ||A||_F)";
  r.extra["value_at_identity"] = json_number(g.value_at_identity());
  if (opt.samples < 1) throw ArgumentError("dm_sweep: samples must be >= 1");

  auto obj = [&](const SymMat& a) { return gap(a) / tol_scale(a); };
  SlackTracker tr;
  std::vector<Start> worst;
  const std::size_t keep = static_cast<std::size_t>(std::max(opt.hunt_starts, 0));
  auto by_slack = [](const Start& a, const Start& b) {
    return a.slack != b.slack ? a.slack < b.slack : a.index < b.index;
  };
  for (long i = 0; i < opt.samples; ++i) {
    const SymMat a = sample_psd(g.dim(), opt.seed, static_cast<std::uint64_t>(i));
    const double s = obj(a);
    tr.offer(s, {{"A", mat_json(a)}, {"sample", i}});
    if (opt.hunt && keep > 0) {
      worst.push_back({s, i, a});
      if (worst.size() > 4 * keep) {
        std::sort(worst.begin(), worst.end(), by_slack);
        worst.erase(worst.begin() + static_cast<long>(keep), worst.end());
      }
    }
  }
  const long sampled = tr.count();
  long evals = 0;
  if (opt.hunt) {
    std::sort(worst.begin(), worst.end(), by_slack);
    if (worst.size() > keep) worst.erase(worst.begin() + static_cast<long>(keep), worst.end());
    for (const auto& s : worst) hunt_from(s, obj, opt.hunt_iterations, tr, evals);
  }
  tr.write_to(r);
  r.samples = sampled;
  r.extra["hunt_evaluations"] = evals;
  r.finalize();
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

double dm_gap(const PolyOperator& g, const SymMat& a) { return gap_impl(g, a); }

CheckReport dm_sweep(const PolyOperator& g, const SweepOptions& opt) {
  CheckReport r;
  r.suite = "majorize";
  const bool waived = opt.hunt && opt.waive_prechecks;
  if (!waived) {
    const auto probe = central_gradient(g);
    const auto k = is_I_central(g);
    const CheckReport dir = is_dirichlet(g, opt.dirichlet_samples, opt.seed);
    r.extra["central_k"] = json_number(probe.k);
    r.extra["dirichlet_min_slack"] = json_number(dir.min_slack);
    std::string why;
    if (!k) why += "operator is not I-central (gradient deviation " + std::to_string(probe.deviation) + ")";
    if (!dir.passed) {
      if (!why.empty()) why += "; ";
      why += "Dirichlet precheck failed";
    }
    if (!why.empty()) {
      r.op = g.spec();
      r.params = {{"samples", opt.samples}, {"seed", opt.seed}, {"hunt", opt.hunt}};
      r.tolerance = kMajorizeTol;
      r.skipped = why;
      r.witness = dir.witness;
      r.finalize();
      return r;
    }
  } else {
    r.notes.push_back("prechecks waived");
  }
  if (g.kind() == OpKind::Trace || (g.kind() == OpKind::KHessian && g.param() == 1)) {
    r.notes.push_back("tested as tr(A) >= n det(A)^(1/n), which implies tr(A) >= det(A)^(1/n)");
  }
  if (g.kind() == OpKind::PFoldSum) {
    const double p = g.param();
    const double N = g.degree();
    r.notes.push_back("g(I) = p^N = " + std::to_string(std::pow(p, N)) + ", not p*C(n,p) = " +
                      std::to_string(p * N));
  }
  return sweep(g, opt, [&](const SymMat& a) { return gap_impl(g, a); }, std::move(r));
}

double maclaurin_gap(const SymMat& a, int k, int l) {
  const int n = a.dim();
  if (k < 1 || l > n || k > l) {
    throw ArgumentError("maclaurin_gap: need 1 <= k <= l <= n, got k=" + std::to_string(k) +
                        ", l=" + std::to_string(l) + ", n=" + std::to_string(n));
  }
  auto lam = eigenvalues(a).values;
  for (double& v : lam) v = std::max(v, 0.0);
  const auto e = elementary_symmetric_all(lam);
  const double mk = std::pow(e[k] / binomial(n, k), 1.0 / k);
  const double ml = std::pow(e[l] / binomial(n, l), 1.0 / l);
  return mk - ml;
}

CheckReport maclaurin_check(int n, long samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("maclaurin_check: samples must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport r;
  r.suite = "maclaurin";
  r.op = "n=" + std::to_string(n);
  r.params = {{"n", n}, {"samples", samples}, {"seed", seed}};
  r.tolerance = kMajorizeTol;
  r.scale_note = "maclaurin_gap / (1 + ||A||_F), minimum over all 1 <= k <= l <= n";
  SlackTracker tr;
  for (long i = 0; i < samples; ++i) {
    const SymMat a = sample_psd(n, seed, static_cast<std::uint64_t>(i));
    const double scale = tol_scale(a);
    double worst = std::numeric_limits<double>::infinity();
    int wk = 1, wl = 1;
    for (int k = 1; k <= n; ++k) {
      for (int l = k; l <= n; ++l) {
        const double s = maclaurin_gap(a, k, l) / scale;
        if (s < worst) {
          worst = s;
          wk = k;
          wl = l;
        }
      }
    }
    tr.offer(worst, {{"A", mat_json(a)}, {"k", wk}, {"l", wl}, {"sample", i}});
  }
  tr.write_to(r);
  r.finalize();
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<std::vector<int>> monomial_basis(int n, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> alpha(n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      alpha[i] = left;
      out.push_back(alpha);
      return;
    }
    for (int a = left; a >= 0; --a) {
      alpha[i] = a;
      rec(i + 1, left - a);
    }
  };
  rec(0, degree);
  return out;
}

namespace {

double monomial(const std::vector<int>& alpha, const std::vector<double>& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (int e = 0; e < alpha[i]; ++e) v *= x[i];
  }
  return v;
}

}  // namespace

double MonomialExpansion::evaluate(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n) throw ArgumentError("MonomialExpansion: wrong point dimension");
  double s = 0.0;
  for (std::size_t m = 0; m < exponents.size(); ++m) s += coefficients[m] * monomial(exponents[m], x);
  return s;
}

double MonomialExpansion::coefficient(const std::vector<int>& alpha) const {
  for (std::size_t m = 0; m < exponents.size(); ++m) {
    if (exponents[m] == alpha) return coefficients[m];
  }
  return 0.0;
}

MonomialExpansion coefficient_expansion(const PolyOperator& g, const Eigen::MatrixXd& tau,
                                        std::uint64_t seed) {
  const int n = g.dim();
  const int N = g.degree();
  if (tau.rows() != n || tau.cols() != n) throw ArgumentError("coefficient_expansion: tau has the wrong size");
  const double basis_size = binomial(N + n - 1, n - 1);
  if (basis_size > kBasisGuard) {
    throw NumericError("coefficient_expansion: " + std::to_string(static_cast<long>(basis_size)) +
                           " monomials exceed the limit of 10000",
                       basis_size);
  }
  MonomialExpansion out;
  out.n = n;
  out.degree = N;
  out.exponents = monomial_basis(n, N);
  const int M = static_cast<int>(out.exponents.size());
  const int P = 2 * M;

  CounterRng rng(seed, stream_id(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(N)));
  Eigen::MatrixXd v(P, M);
  Eigen::VectorXd b(P);
  std::vector<double> x(n);
  for (int p = 0; p < P; ++p) {
    for (int i = 0; i < n; ++i) {
      const double mag = rng.uniform(0.1, 2.0);
      x[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    for (int m = 0; m < M; ++m) v(p, m) = monomial(out.exponents[m], x);
    b[p] = g.evaluate(conjugate(diag(x), tau));
  }

  // Damped normal equations on unit-norm columns, two refinement steps.
  Eigen::VectorXd colscale(M);
  for (int m = 0; m < M; ++m) colscale[m] = 1.0 / v.col(m).norm();
  const Eigen::MatrixXd w = v * colscale.asDiagonal();
  Eigen::MatrixXd normal = w.transpose() * w;
  normal.diagonal().array() += 1e-12;
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  Eigen::VectorXd y = llt.solve(w.transpose() * b);
  for (int pass = 0; pass < 2; ++pass) y += llt.solve(w.transpose() * (b - w * y));
  const Eigen::VectorXd c = colscale.cwiseProduct(y);

  const double bmax = b.cwiseAbs().maxCoeff();
  out.fit_residual = (v * c - b).cwiseAbs().maxCoeff() / (bmax > 0.0 ? bmax : 1.0);
  if (!(out.fit_residual <= kFitAudit)) {
    throw NumericError("coefficient_expansion of " + g.spec() + ": refit residual " +
                           std::to_string(out.fit_residual) + " exceeds 1e-8",
                       out.fit_residual);
  }
  out.coefficients.assign(c.data(), c.data() + M);
  return out;
}

CheckReport coefficient_condition(const PolyOperator& g, int num_tau, std::uint64_t seed, double tol,
                                  std::optional<CoefficientCertificate>* certificate) {
  if (num_tau < 0) throw ArgumentError("coefficient_condition: num_tau must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = g.dim();
  CheckReport r;
  r.suite = "coeffcond";
  r.op = g.spec();
  r.params = {{"num_tau", num_tau}, {"seed", seed}};
  r.tolerance = tol;
  r.scale_note = "smallest monomial coefficient / max |coefficient| of the same expansion";
  SlackTracker tr;
  double worst_fit = 0.0;
  for (int t = 0; t <= num_tau; ++t) {
    const Eigen::MatrixXd tau = t == 0 ? Eigen::MatrixXd::Identity(n, n)
                                       : random_orthogonal(n, stream_id(seed, static_cast<std::uint64_t>(t)));
    const auto ex = coefficient_expansion(g, tau, seed + static_cast<std::uint64_t>(t));
    worst_fit = std::max(worst_fit, ex.fit_residual);
    double cmax = 0.0;
    std::size_t arg = 0;
    for (std::size_t m = 0; m < ex.coefficients.size(); ++m) {
      cmax = std::max(cmax, std::abs(ex.coefficients[m]));
      if (ex.coefficients[m] < ex.coefficients[arg]) arg = m;
    }
    nlohmann::json tj = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < n; ++j) row.push_back(tau(i, j));
      tj.push_back(row);
    }
    tr.offer(ex.coefficients[arg] / (cmax > 0.0 ? cmax : 1.0),
             {{"tau", tj}, {"monomial", ex.exponents[arg]}, {"coefficient", ex.coefficients[arg]},
              {"tau_index", t}});
  }
  tr.write_to(r);
  r.extra["max_fit_residual"] = json_number(worst_fit);
  r.finalize();
  if (certificate) {
    certificate->reset();
    const auto k = is_I_central(g);
    if (r.passed && k) {
      *certificate = CoefficientCertificate(g.spec(), *k);
    } else if (r.passed) {
      r.notes.push_back("no certificate issued: operator is not I-central");
    }
  }
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double dm_gap_ng(const PolyOperator& g, const SymMat& a, const CoefficientCertificate& cert) {
  if (cert.op() != g.spec()) {
    throw PreconditionError("dm_gap_ng: " + g.spec() +
                            " has no coefficient-condition certificate; run coefficient_condition first");
  }
  return gap_impl(g, a);
}

CheckReport dm_sweep_ng(const PolyOperator& g, const CoefficientCertificate& cert, const SweepOptions& opt) {
  if (cert.op() != g.spec()) {
    throw PreconditionError("dm_sweep_ng: certificate is for " + cert.op() + ", not " + g.spec());
  }
  CheckReport r;
  r.suite = "majorize";
  r.notes.push_back("coefficient-condition path, certified central k = " + std::to_string(cert.central_k()));
  return sweep(g, opt, [&](const SymMat& a) { return dm_gap_ng(g, a, cert); }, std::move(r));
}

}  // namespace abplab
