#include "abplab/operators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>

#include "abplab/rng.hpp"

namespace abplab {

namespace {

constexpr int kMaxDim = 12;
constexpr int kMaxDegree = 40;
constexpr double kFitAudit = 1e-8;
constexpr double kConeTheta = 1e-8;
// Accepting a consolidated root set requires its monic coefficients to
// match the interpolated ones to this relative accuracy (scaled variable).
constexpr double kClusterBackwardTol = 1e-9;

void check_dim_range(int n) {
  if (n < 1 || n > kMaxDim) {
    throw ArgumentError("operator dimension must lie in [1, " + std::to_string(kMaxDim) +
                        "], got " + std::to_string(n));
  }
}

void check_degree(int degree) {
  if (degree < 1 || degree > kMaxDegree) {
    throw ArgumentError("operator degree must lie in [1, " + std::to_string(kMaxDegree) +
                        "], got " + std::to_string(degree));
  }
}

double pfold_value(const std::vector<double>& lam, int p) {
  const int n = static_cast<int>(lam.size());
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  double prod = 1.0;
  while (true) {
    double s = 0.0;
    for (int i : idx) s += lam[i];
    prod *= s;
    int j = p - 1;
    while (j >= 0 && idx[j] == n - p + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int m = j + 1; m < p; ++m) idx[m] = idx[m - 1] + 1;
  }
  return prod;
}

}  // namespace

struct PolyOperator::Node {
  OpKind kind = OpKind::Det;
  int n = 1;
  int degree = 1;
  int param = 0;
  std::shared_ptr<const Node> left, right;
  std::string name;
  std::function<double(const SymMat&)> fn;
  ConeKind cone = ConeKind::Garding;
  double g_identity = 0.0;
};

PolyOperator::PolyOperator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

PolyOperator PolyOperator::finish(std::shared_ptr<Node> node) {
  const PolyOperator op(node);
  const double gi = op.evaluate(identity(node->n));
  if (!(gi > 0.0)) {
    throw ArgumentError("operator " + op.spec() + " has g(I) = " + std::to_string(gi) +
                        ", must be positive");
  }
  node->g_identity = gi;
  return op;
}

PolyOperator PolyOperator::det(int n) {
  check_dim_range(n);
  auto node = std::make_shared<Node>();
  node->kind = OpKind::Det;
  node->n = n;
  node->degree = n;
  return finish(node);
}

PolyOperator PolyOperator::khessian(int k, int n) {
  check_dim_range(n);
  if (k < 1 || k > n) {
    throw ArgumentError("sigma: k must lie in [1, n], got k=" + std::to_string(k) +
                        ", n=" + std::to_string(n));
  }
  auto node = std::make_shared<Node>();
  node->kind = OpKind::KHessian;
  node->n = n;
  node->degree = k;
  node->param = k;
  return finish(node);
}

PolyOperator PolyOperator::pfold(int p, int n) {
  check_dim_range(n);
  if (p < 1 || p > n) {
    throw ArgumentError("pfold: p must lie in [1, n], got p=" + std::to_string(p) +
                        ", n=" + std::to_string(n));
  }
  const double degree = binomial(n, p);
  check_degree(static_cast<int>(std::min(degree, 1e6)));
  auto node = std::make_shared<Node>();
  node->kind = OpKind::PFoldSum;
  node->n = n;
  node->degree = static_cast<int>(degree);
  node->param = p;
  return finish(node);
}

PolyOperator PolyOperator::trace(int n) {
  check_dim_range(n);
  auto node = std::make_shared<Node>();
  node->kind = OpKind::Trace;
  node->n = n;
  node->degree = 1;
  return finish(node);
}

PolyOperator PolyOperator::product(const PolyOperator& left, const PolyOperator& right) {
  if (left.dim() != right.dim()) {
    throw ArgumentError("prod: factors act on different dimensions (" +
                        std::to_string(left.dim()) + " vs " + std::to_string(right.dim()) + ")");
  }
  check_degree(left.degree() + right.degree());
  auto node = std::make_shared<Node>();
  node->kind = OpKind::Product;
  node->n = left.dim();
  node->degree = left.degree() + right.degree();
  node->left = left.node_;
  node->right = right.node_;
  node->cone = (left.cone() == ConeKind::Garding && right.cone() == ConeKind::Garding)
                   ? ConeKind::Garding
                   : ConeKind::Psd;
  return finish(node);
}

PolyOperator PolyOperator::radial_derivative(const PolyOperator& base, int l) {
  if (l < 1 || l >= base.degree()) {
    throw ArgumentError("rderiv: l must lie in [1, N-1] with N = " +
                        std::to_string(base.degree()) + ", got " + std::to_string(l));
  }
  auto node = std::make_shared<Node>();
  node->kind = OpKind::RadialDerivative;
  node->n = base.dim();
  node->degree = base.degree() - l;
  node->param = l;
  node->left = base.node_;
  node->cone = base.cone();
  return finish(node);
}

PolyOperator PolyOperator::normsqdet(int n) {
  check_dim_range(n);
  auto node = std::make_shared<Node>();
  node->kind = OpKind::NormSqDet;
  node->n = n;
  node->degree = n + 2;
  node->cone = ConeKind::Psd;
  return finish(node);
}

PolyOperator PolyOperator::custom(std::string name, int n, int degree,
                                  std::function<double(const SymMat&)> fn, ConeKind cone) {
  check_dim_range(n);
  check_degree(degree);
  if (!fn) throw ArgumentError("custom operator needs an evaluator");
  auto node = std::make_shared<Node>();
  node->kind = OpKind::Custom;
  node->n = n;
  node->degree = degree;
  node->name = std::move(name);
  node->fn = std::move(fn);
  node->cone = cone;
  return finish(node);
}

OpKind PolyOperator::kind() const { return node_->kind; }
int PolyOperator::dim() const { return node_->n; }
int PolyOperator::degree() const { return node_->degree; }
double PolyOperator::value_at_identity() const { return node_->g_identity; }
int PolyOperator::param() const { return node_->param; }
ConeKind PolyOperator::cone() const { return node_->cone; }

PolyOperator PolyOperator::left() const {
  if (!node_->left) throw ArgumentError("operator " + spec() + " has no child");
  return PolyOperator(node_->left);
}

PolyOperator PolyOperator::right() const {
  if (!node_->right) throw ArgumentError("operator " + spec() + " has no right factor");
  return PolyOperator(node_->right);
}

bool PolyOperator::orthogonally_invariant() const {
  switch (node_->kind) {
    case OpKind::Det:
    case OpKind::KHessian:
    case OpKind::PFoldSum:
    case OpKind::Trace:
    case OpKind::NormSqDet:
      return true;
    case OpKind::Product:
      return PolyOperator(node_->left).orthogonally_invariant() &&
             PolyOperator(node_->right).orthogonally_invariant();
    case OpKind::RadialDerivative:
      return PolyOperator(node_->left).orthogonally_invariant();
    case OpKind::Custom:
      return false;
  }
  return false;
}

std::string PolyOperator::spec() const {
  const std::string n = std::to_string(node_->n);
  switch (node_->kind) {
    case OpKind::Det: return "det:n=" + n;
    case OpKind::KHessian: return "sigma:k=" + std::to_string(node_->param) + ",n=" + n;
    case OpKind::PFoldSum: return "pfold:p=" + std::to_string(node_->param) + ",n=" + n;
    case OpKind::Trace: return "trace:n=" + n;
    case OpKind::NormSqDet: return "normsqdet:n=" + n;
    case OpKind::Product:
      return "prod(" + PolyOperator(node_->left).spec() + "," + PolyOperator(node_->right).spec() + ")";
    case OpKind::RadialDerivative:
      return "rderiv(" + PolyOperator(node_->left).spec() + ",l=" + std::to_string(node_->param) + ")";
    case OpKind::Custom: return node_->name;
  }
  return "?";
}

namespace {

// Coefficients of t -> g(tI + diag(lam)) straight from the spectrum, for
// operators built from the catalog without custom leaves. Radial
// derivatives read these instead of an interpolated fit, whose roundoff
// swamps the low-order coefficients of near-singular matrices.
std::optional<std::vector<double>> spectral_radial_coeffs(const PolyOperator& g,
                                                          const std::vector<double>& lam) {
  const int n = static_cast<int>(lam.size());
  auto from_roots = [](double lead, const std::vector<double>& mu) {
    // lead * prod (t + mu_i)
    const auto e = elementary_symmetric_all(mu);
    const int N = static_cast<int>(mu.size());
    std::vector<double> c(N + 1);
    for (int k = 0; k <= N; ++k) c[k] = lead * e[N - k];
    return c;
  };
  switch (g.kind()) {
    case OpKind::Det: return from_roots(1.0, lam);
    case OpKind::Trace: {
      double t = 0.0;
      for (double v : lam) t += v;
      return std::vector<double>{t, static_cast<double>(n)};
    }
    case OpKind::KHessian: {
      const int k = g.param();
      const auto e = elementary_symmetric_all(lam);
      std::vector<double> c(k + 1);
      for (int m = 0; m <= k; ++m) c[m] = binomial(n - k + m, m) * e[k - m];
      return c;
    }
    case OpKind::PFoldSum: {
      const int p = g.param();
      std::vector<double> mu;
      std::vector<int> idx(p);
      std::iota(idx.begin(), idx.end(), 0);
      while (true) {
        double sum = 0.0;
        for (int i : idx) sum += lam[i];
        mu.push_back(sum / p);
        int k = p - 1;
        while (k >= 0 && idx[k] == n - p + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
      }
      return from_roots(std::pow(static_cast<double>(p), static_cast<double>(mu.size())), mu);
    }
    case OpKind::NormSqDet: {
      double s1 = 0.0, s2 = 0.0;
      for (double v : lam) {
        s1 += v;
        s2 += v * v;
      }
      const auto d = from_roots(1.0, lam);
      const double q[3] = {s2, 2.0 * s1, static_cast<double>(n)};
      std::vector<double> c(d.size() + 2, 0.0);
      for (std::size_t i = 0; i < d.size(); ++i)
        for (int j = 0; j < 3; ++j) c[i + j] += d[i] * q[j];
      return c;
    }
    case OpKind::Product: {
      const auto l = spectral_radial_coeffs(g.left(), lam);
      const auto r = spectral_radial_coeffs(g.right(), lam);
      if (!l || !r) return std::nullopt;
      std::vector<double> c(l->size() + r->size() - 1, 0.0);
      for (std::size_t i = 0; i < l->size(); ++i)
        for (std::size_t j = 0; j < r->size(); ++j) c[i + j] += (*l)[i] * (*r)[j];
      return c;
    }
    case OpKind::RadialDerivative: {
      const auto b = spectral_radial_coeffs(g.left(), lam);
      if (!b) return std::nullopt;
      const int l = g.param();
      std::vector<double> c(b->size() - l);
      for (std::size_t m = 0; m < c.size(); ++m) c[m] = (*b)[m + l] * factorial(static_cast<int>(m) + l) / factorial(static_cast<int>(m));
      return c;
    }
    case OpKind::Custom: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

double PolyOperator::evaluate(const SymMat& a) const {
  if (a.dim() != node_->n) {
    throw ArgumentError("operator " + spec() + " needs a " + std::to_string(node_->n) + "x" +
                        std::to_string(node_->n) + " matrix, got dimension " + std::to_string(a.dim()));
  }
  switch (node_->kind) {
    case OpKind::Det: return abplab::det(a);
    case OpKind::KHessian: return elementary_symmetric(eigenvalues(a), node_->param);
    case OpKind::PFoldSum: return pfold_value(eigenvalues(a).values, node_->param);
    case OpKind::Trace: return abplab::trace(a);
    case OpKind::NormSqDet: {
      const double f = frobenius_norm(a);
      return f * f * abplab::det(a);
    }
    case OpKind::Product:
      return PolyOperator(node_->left).evaluate(a) * PolyOperator(node_->right).evaluate(a);
    case OpKind::RadialDerivative: {
      const int l = node_->param;
      const PolyOperator base(node_->left);
      if (auto c = spectral_radial_coeffs(base, eigenvalues(a).values)) return factorial(l) * (*c)[l];
      return factorial(l) * radial_poly_coeffs(base, a).coeffs[l];
    }
    case OpKind::Custom: return node_->fn(a);
  }
  return 0.0;
}

RadialPoly radial_poly_coeffs(const PolyOperator& g, const SymMat& a) {
  if (a.dim() != g.dim()) {
    throw ArgumentError("radial_poly_coeffs: dimension mismatch");
  }
  const int N = g.degree();
  const double radius = 2.0 * (1.0 + spectral_radius(a));

  // Fit in s = t / radius so the Vandermonde system lives on [-1, 1].
  Eigen::MatrixXd v(N + 1, N + 1);
  Eigen::VectorXd phi(N + 1);
  double phi_max = 0.0;
  for (int j = 0; j <= N; ++j) {
    const double s = std::cos(M_PI * (2.0 * j + 1.0) / (2.0 * (N + 1)));
    double pw = 1.0;
    for (int k = 0; k <= N; ++k) {
      v(j, k) = pw;
      pw *= s;
    }
    phi[j] = g.evaluate(shift(a, radius * s));
    phi_max = std::max(phi_max, std::abs(phi[j]));
  }
  const Eigen::VectorXd d = v.colPivHouseholderQr().solve(phi);

  // Audit at the N interior extrema of T_{N+1}, which interleave the nodes.
  double worst = 0.0;
  for (int j = 0; j < N; ++j) {
    const double s = std::cos(M_PI * (j + 1.0) / (N + 1));
    double fit = 0.0;
    for (int k = N; k >= 0; --k) fit = fit * s + d[k];
    const double exact = g.evaluate(shift(a, radius * s));
    phi_max = std::max(phi_max, std::abs(exact));
    worst = std::max(worst, std::abs(fit - exact));
  }

  RadialPoly out;
  out.radius = radius;
  out.residual = phi_max > 0.0 ? worst / phi_max : worst;
  if (!(out.residual <= kFitAudit)) {
    throw NumericError("radial interpolation of " + g.spec() + " failed its refit audit (relative residual " +
                           std::to_string(out.residual) + ")",
                       out.residual);
  }
  out.coeffs.resize(N + 1);
  double rk = 1.0;
  for (int k = 0; k <= N; ++k) {
    out.coeffs[k] = d[k] / rk;
    rk *= radius;
  }
  return out;
}

namespace {

using cplx = std::complex<double>;

std::vector<cplx> companion_roots(const std::vector<double>& monic) {
  // monic[k] is the coefficient of s^k, monic[N] == 1.
  const int N = static_cast<int>(monic.size()) - 1;
  if (N == 1) return {cplx(-monic[0], 0.0)};
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, N);
  for (int i = 1; i < N; ++i) c(i, i - 1) = 1.0;
  for (int i = 0; i < N; ++i) c(i, N - 1) = -monic[i];
  Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("companion eigensolve failed", 0);
  }
  std::vector<cplx> roots(N);
  for (int i = 0; i < N; ++i) roots[i] = es.eigenvalues()[i];
  return roots;
}

std::vector<double> monic_from_roots(const std::vector<double>& roots) {
  // prod (s - r): reuse the sigma recurrence on negated roots.
  std::vector<double> neg(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) neg[i] = -roots[i];
  const auto e = elementary_symmetric_all(neg);
  const int N = static_cast<int>(roots.size());
  std::vector<double> out(N + 1);
  for (int k = 0; k <= N; ++k) out[k] = e[N - k];
  return out;
}

double coeff_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return worst / scale;
}

// Single-linkage clusters of roots closer than `radius`.
std::vector<int> cluster_labels(const std::vector<cplx>& r, double radius) {
  const int N = static_cast<int>(r.size());
  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      if (std::abs(r[i] - r[j]) <= radius) parent[find(i)] = find(j);
    }
  }
  std::vector<int> label(N);
  for (int i = 0; i < N; ++i) label[i] = find(i);
  return label;
}

// Garding eigenvalues read off the spectrum of A, where phi_A factors into
// linear terms: det and sigma_n (the eigenvalues), pfold (p-fold sums over
// p), trace and sigma_1 (their mean). Companion roots of a multiple root
// lose digits (eps^(1/m)), which rank-deficient PSD samples hit.
std::optional<std::vector<double>> closed_form_garding(const PolyOperator& g, const SymMat& a) {
  switch (g.kind()) {
    case OpKind::Det: return eigenvalues(a).values;
    case OpKind::KHessian:
      if (g.param() == a.dim()) return eigenvalues(a).values;
      if (g.param() == 1) return std::vector<double>{trace(a) / a.dim()};
      return std::nullopt;
    case OpKind::Trace: return std::vector<double>{trace(a) / a.dim()};
    case OpKind::PFoldSum: {
      const auto lam = eigenvalues(a).values;
      const int n = a.dim(), p = g.param();
      std::vector<double> out;
      std::vector<int> idx(p);
      std::iota(idx.begin(), idx.end(), 0);
      while (true) {
        double sum = 0.0;
        for (int i : idx) sum += lam[i];
        out.push_back(sum / p);
        int k = p - 1;
        while (k >= 0 && idx[k] == n - p + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
      }
      return out;
    }
    default: return std::nullopt;
  }
}

}  // namespace

HypResult<GardingSpectrum> garding_eigenvalues(const PolyOperator& g, const SymMat& a, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("garding_eigenvalues: tol must be positive");
  if (a.dim() != g.dim()) throw ArgumentError("garding_eigenvalues: dimension mismatch");
  if (g.kind() == OpKind::Product) {
    // Roots of a product are the union of the factors' roots.
    auto l = garding_eigenvalues(g.left(), a, tol);
    if (!l) return l;
    auto r = garding_eigenvalues(g.right(), a, tol);
    if (!r) return r;
    GardingSpectrum out = l.value();
    const auto& rv = r.value();
    out.values.insert(out.values.end(), rv.values.begin(), rv.values.end());
    std::sort(out.values.begin(), out.values.end());
    out.max_imag = std::max(out.max_imag, rv.max_imag);
    out.raw_max_imag = std::max(out.raw_max_imag, rv.raw_max_imag);
    return out;
  }
  if (auto closed = closed_form_garding(g, a)) {
    GardingSpectrum out;
    out.values = std::move(*closed);
    std::sort(out.values.begin(), out.values.end());
    return out;
  }
  const RadialPoly rp = radial_poly_coeffs(g, a);
  const int N = g.degree();
  const double R = rp.radius;

  std::vector<double> monic(N + 1);
  {
    double rk = 1.0;
    std::vector<double> d(N + 1);
    for (int k = 0; k <= N; ++k) {
      d[k] = rp.coeffs[k] * rk;
      rk *= R;
    }
    for (int k = 0; k <= N; ++k) monic[k] = d[k] / d[N];
  }
  const std::vector<cplx> roots = companion_roots(monic);

  auto imag_ok = [&](cplx s) {
    const double t_abs = std::abs(s) * R;
    return std::abs(s.imag()) * R <= tol * (1.0 + t_abs);
  };

  GardingSpectrum out;
  for (const auto& s : roots) out.raw_max_imag = std::max(out.raw_max_imag, std::abs(s.imag()) * R);

  std::vector<double> real_roots;
  if (std::all_of(roots.begin(), roots.end(), imag_ok)) {
    for (const auto& s : roots) real_roots.push_back(s.real());
  } else {
    // Near-multiple real roots come back from the eigensolve as a small
    // ring of complex values. Merge clusters at growing radii into their
    // real centroids and accept if the merged roots still reproduce the
    // coefficients.
    double smax = 0.0;
    for (const auto& s : roots) smax = std::max(smax, std::abs(s));
    bool accepted = false;
    for (double radius = 1e-10; radius <= 0.3 && !accepted; radius *= 2.0) {
      const auto label = cluster_labels(roots, radius * (1.0 + smax));
      std::vector<double> cand(N);
      bool all_ok = true;
      for (int i = 0; i < N; ++i) {
        cplx sum = 0.0;
        int count = 0;
        bool complex_member = false;
        for (int j = 0; j < N; ++j) {
          if (label[j] != label[i]) continue;
          sum += roots[j];
          ++count;
          if (!imag_ok(roots[j])) complex_member = true;
        }
        const cplx centroid = sum / static_cast<double>(count);
        if (complex_member && !imag_ok(centroid)) all_ok = false;
        cand[i] = complex_member ? centroid.real() : roots[i].real();
      }
      if (!all_ok) continue;
      if (coeff_distance(monic_from_roots(cand), monic) <= kClusterBackwardTol) {
        real_roots = cand;
        accepted = true;
      }
    }
    if (!accepted) return NotHyperbolicAt{a, out.raw_max_imag};
  }

  out.values.resize(N);
  for (int k = 0; k < N; ++k) out.values[k] = -R * real_roots[k];
  std::sort(out.values.begin(), out.values.end());
  out.max_imag = 0.0;
  if (real_roots.size() == roots.size()) {
    // Report what remains after consolidation: zero for merged clusters,
    // the raw value for roots that were already real within tolerance.
    for (int k = 0; k < N; ++k) {
      if (std::abs(real_roots[k] - roots[k].real()) == 0.0) {
        out.max_imag = std::max(out.max_imag, std::abs(roots[k].imag()) * R);
      }
    }
  }
  return out;
}

const char* to_string(ConeTag tag) {
  switch (tag) {
    case ConeTag::Interior: return "interior";
    case ConeTag::Boundary: return "boundary";
    case ConeTag::Outside: return "outside";
  }
  return "?";
}

HypResult<ConePosition> cone_contains(const PolyOperator& g, const SymMat& a) {
  const auto spec = garding_eigenvalues(g, a);
  if (!spec) return spec.failure();
  const auto& v = spec.value().values;
  const double scale = 1.0 + std::max(std::abs(v.front()), std::abs(v.back()));
  ConePosition pos;
  pos.min_garding_eig = v.front();
  if (v.front() > kConeTheta * scale) {
    pos.tag = ConeTag::Interior;
  } else if (v.front() < -kConeTheta * scale) {
    pos.tag = ConeTag::Outside;
  } else {
    pos.tag = ConeTag::Boundary;
  }
  return pos;
}

bool in_closed_cone(const PolyOperator& g, const SymMat& a) {
  if (g.cone() == ConeKind::Psd) {
    const auto v = eigenvalues(a).values;
    const double scale = 1.0 + std::max(std::abs(v.front()), std::abs(v.back()));
    return v.front() >= -kConeTheta * scale;
  }
  const auto pos = cone_contains(g, a);
  return pos.ok() && pos.value().tag != ConeTag::Outside;
}

HypResult<SymMat> boundary_project(const PolyOperator& g, const SymMat& a) {
  const auto spec = garding_eigenvalues(g, a);
  if (!spec) return spec.failure();
  return shift(a, -spec.value().values.front());
}

CentralityProbe central_gradient(const PolyOperator& g) {
  const int n = g.dim();
  const SymMat id = identity(n);
  constexpr double h = 1e-5;
  auto diff = [&](int k, double step) {
    SymMat plus = id, minus = id;
    plus.set_coord(k, id.coord(k) + step);
    minus.set_coord(k, id.coord(k) - step);
    return (g.evaluate(plus) - g.evaluate(minus)) / (2.0 * step);
  };
  CentralityProbe out;
  out.gradient = Eigen::MatrixXd::Zero(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      const double d = (4.0 * diff(k, h / 2) - diff(k, h)) / 3.0;
      // An off-diagonal coordinate moves both (i,j) and (j,i).
      const double gij = (i == j) ? d : d / 2.0;
      out.gradient(i, j) = gij;
      out.gradient(j, i) = gij;
    }
  }
  out.k = out.gradient.trace() / n;
  out.deviation = (out.gradient - out.k * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  return out;
}

std::optional<double> is_I_central(const PolyOperator& g, double tol) {
  const auto probe = central_gradient(g);
  if (probe.k > 0.0 && probe.deviation <= tol * (1.0 + probe.k)) return probe.k;
  return std::nullopt;
}

SymMat sample_psd(int n, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, stream_id(index, 0x5053));
  const auto style = static_cast<PsdStyle>(index % 3);
  const SymMat m = random_psd(n, rng.next_u64(), style);
  return std::exp(rng.uniform(-2.0, 2.0)) * m;
}

HypResult<SymMat> sample_closed_cone(const PolyOperator& g, std::uint64_t seed, std::uint64_t index) {
  const int n = g.dim();
  CounterRng rng(seed, stream_id(index, 0x434f4e45));
  if (index % 4 == 3) return sample_psd(n, rng.next_u64(), index);
  const SymMat s = std::exp(rng.uniform(-1.0, 1.0)) * random_symmetric(n, rng.next_u64());
  double lam_min;
  if (g.cone() == ConeKind::Psd) {
    lam_min = eigenvalues(s).values.front();
  } else {
    const auto spec = garding_eigenvalues(g, s);
    if (!spec) return spec.failure();
    lam_min = spec.value().values.front();
  }
  double shift_by = 0.0;
  switch (index % 3) {
    case 0: shift_by = 0.0; break;
    case 1: shift_by = 1e-3 * rng.uniform(); break;
    default: shift_by = rng.uniform(0.5, 3.0); break;
  }
  return shift(s, shift_by - lam_min);
}

namespace {

nlohmann::json matrix_witness(const SymMat& a) {
  nlohmann::json j;
  to_json(j, a);
  return j;
}

double imag_slack(const NotHyperbolicAt& f) { return -f.max_imag / tol_scale(f.at); }

template <class Fn>
CheckReport timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport r = fn();
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

CheckReport is_dirichlet(const PolyOperator& g, long samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("is_dirichlet: samples must be >= 1");
  return timed([&] {
    CheckReport r;
    r.suite = "dirichlet";
    r.op = g.spec();
    r.params = {{"samples", samples}, {"seed", seed}};
    r.tolerance = 1e-7;
    r.scale_note = "min Garding eigenvalue / (1 + ||A||_F); non-hyperbolic samples score -max|Im root| / (1 + ||A||_F)";
    SlackTracker tr;
    long non_hyperbolic = 0;
    for (long i = 0; i < samples; ++i) {
      const SymMat a = sample_psd(g.dim(), seed, static_cast<std::uint64_t>(i));
      const auto spec = garding_eigenvalues(g, a);
      if (!spec) {
        ++non_hyperbolic;
        tr.offer(imag_slack(spec.failure()),
                 {{"A", matrix_witness(a)}, {"not_hyperbolic", true}, {"sample", i}});
        continue;
      }
      tr.offer(spec.value().values.front() / tol_scale(a), {{"A", matrix_witness(a)}, {"sample", i}});
    }
    tr.write_to(r);
    r.extra["not_hyperbolic_samples"] = non_hyperbolic;
    if (non_hyperbolic > 0) r.notes.push_back("operator is not hyperbolic at some PSD samples");
    r.finalize();
    return r;
  });
}

CheckReport degenerate_ellipticity_check(const PolyOperator& g, long samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("degenerate_ellipticity_check: samples must be >= 1");
  return timed([&] {
    CheckReport r;
    r.suite = "ellipticity";
    r.op = g.spec();
    r.params = {{"samples", samples}, {"seed", seed}};
    r.tolerance = 1e-8;
    r.scale_note = "(g(A+P) - g(A)) / (1 + ||A||_F + ||P||_F)^N";
    SlackTracker tr;
    const int N = g.degree();
    for (long i = 0; i < samples; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      const auto a = sample_closed_cone(g, seed, idx);
      if (!a) {
        tr.offer(imag_slack(a.failure()),
                 {{"S", matrix_witness(a.failure().at)}, {"not_hyperbolic", true}, {"sample", i}});
        continue;
      }
      const SymMat p = sample_psd(g.dim(), seed ^ 0x50534450ULL, idx);
      const double scale = 1.0 + frobenius_norm(a.value()) + frobenius_norm(p);
      const double gap = g.evaluate(a.value() + p) - g.evaluate(a.value());
      tr.offer(gap / std::pow(scale, N),
               {{"A", matrix_witness(a.value())}, {"P", matrix_witness(p)}, {"sample", i}});
    }
    tr.write_to(r);
    r.finalize();
    return r;
  });
}

TameGap tameness_gap(const PolyOperator& g, const SymMat& a, double eta) {
  if (!(eta > 0.0)) throw ArgumentError("tameness_gap: eta must be positive");
  if (!in_closed_cone(g, a)) {
    throw PreconditionError("tameness_gap: A is outside the closed cone of " + g.spec());
  }
  const double base = g.evaluate(shift(a, eta)) - g.evaluate(a);
  const double en = std::pow(eta, g.degree());
  return {base - g.value_at_identity() * en, base - en};
}

CheckReport tameness_check(const PolyOperator& g, long samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("tameness_check: samples must be >= 1");
  return timed([&] {
    CheckReport r;
    r.suite = "tame";
    r.op = g.spec();
    r.params = {{"samples", samples}, {"seed", seed}};
    r.tolerance = 1e-8;
    r.scale_note = "(g(A+eta I) - g(A) - g(I) eta^N) / (1 + ||A||_F + eta)^N";
    SlackTracker tr;
    double min_without = std::numeric_limits<double>::infinity();
    const int N = g.degree();
    for (long i = 0; i < samples; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      const auto a = sample_closed_cone(g, seed, idx);
      if (!a) {
        tr.offer(imag_slack(a.failure()),
                 {{"S", matrix_witness(a.failure().at)}, {"not_hyperbolic", true}, {"sample", i}});
        continue;
      }
      CounterRng rng(seed, stream_id(idx, 0x54414d45));
      const double eta = std::exp(rng.uniform(-2.0, 1.0));
      // Roundoff can leave a projected sample a hair outside the cone.
      if (!in_closed_cone(g, a.value())) continue;
      const TameGap gap = tameness_gap(g, a.value(), eta);
      const double scale = std::pow(tol_scale(a.value()) + eta, N);
      min_without = std::min(min_without, gap.without_identity / scale);
      tr.offer(gap.with_identity / scale,
               {{"A", matrix_witness(a.value())}, {"eta", json_number(eta)}, {"sample", i}});
    }
    tr.write_to(r);
    r.extra["min_slack_without_identity_factor"] = json_number(min_without);
    r.extra["value_at_identity"] = json_number(g.value_at_identity());
    r.finalize();
    return r;
  });
}

CheckReport hyperbolicity_check(const PolyOperator& g, long samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("hyperbolicity_check: samples must be >= 1");
  return timed([&] {
    CheckReport r;
    r.suite = "hyperbolic";
    r.op = g.spec();
    r.params = {{"samples", samples}, {"seed", seed}};
    r.tolerance = 1e-7;
    r.scale_note =
        "minus the worst relative error among: g(A) vs g(I) prod lambda, spectrum shift rule, "
        "homogeneity, orthogonal invariance";
    SlackTracker tr;
    long non_hyperbolic = 0;
    const int n = g.dim();
    const int N = g.degree();
    const double gi = g.value_at_identity();
    for (long i = 0; i < samples; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      CounterRng rng(seed, stream_id(idx, 0x48595045));
      const SymMat a = std::exp(rng.uniform(-1.0, 1.0)) * random_symmetric(n, rng.next_u64());
      const auto spec = garding_eigenvalues(g, a);
      if (!spec) {
        ++non_hyperbolic;
        tr.offer(imag_slack(spec.failure()),
                 {{"A", matrix_witness(a)}, {"not_hyperbolic", true}, {"sample", i}});
        continue;
      }
      const auto& lam = spec.value().values;
      const double scale = tol_scale(a);
      const double scale_n = std::pow(scale, N);
      const double ga = g.evaluate(a);

      double prod = gi;
      for (double l : lam) prod *= l;
      double err = std::abs(ga - prod) / (gi * scale_n);

      const double s = rng.uniform(-2.0, 2.0);
      const auto shifted = garding_eigenvalues(g, shift(a, s));
      if (!shifted) {
        err = std::max(err, 1.0);
      } else {
        for (int k = 0; k < N; ++k) {
          err = std::max(err, std::abs(shifted.value().values[k] - lam[k] - s) / (scale + 2.0));
        }
      }
      for (double c : {0.5, 2.0}) {
        err = std::max(err, std::abs(g.evaluate(c * a) - std::pow(c, N) * ga) / (std::pow(c, N) * scale_n));
      }
      if (g.orthogonally_invariant()) {
        const auto tau = random_orthogonal(n, rng.next_u64());
        err = std::max(err, std::abs(g.evaluate(conjugate(a, tau)) - ga) / scale_n);
      }
      tr.offer(-err, {{"A", matrix_witness(a)}, {"shift", json_number(s)}, {"sample", i}});
    }
    tr.write_to(r);
    r.extra["not_hyperbolic_samples"] = non_hyperbolic;
    r.finalize();
    return r;
  });
}

}  // namespace abplab
