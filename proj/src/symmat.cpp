#include "abplab/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "abplab/errors.hpp"
#include "abplab/rng.hpp"

namespace abplab {

namespace {

int tri_size(int n) { return n * (n + 1) / 2; }

void check_dim(int n) {
  if (n < 1) throw ArgumentError("matrix dimension must be >= 1, got " + std::to_string(n));
}

void check_same(const SymMat& a, const SymMat& b) {
  if (a.dim() != b.dim()) {
    throw ArgumentError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                        std::to_string(b.dim()));
  }
}

}  // namespace

SymMat::SymMat(int n) : n_(n) {
  check_dim(n);
  upper_.assign(tri_size(n), 0.0);
}

SymMat::SymMat(int n, std::vector<double> upper) : n_(n), upper_(std::move(upper)) {
  check_dim(n);
  if (static_cast<int>(upper_.size()) != tri_size(n)) {
    throw ArgumentError("upper triangle of a " + std::to_string(n) + "x" + std::to_string(n) +
                        " matrix needs " + std::to_string(tri_size(n)) + " entries, got " +
                        std::to_string(upper_.size()));
  }
  for (double v : upper_) {
    if (!std::isfinite(v)) throw ArgumentError("matrix entries must be finite");
  }
}

int SymMat::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row i starts after rows 0..i-1, which hold n + (n-1) + ... + (n-i+1) entries.
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

SymMat SymMat::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ArgumentError("from_dense needs a square matrix");
  const int n = static_cast<int>(m.rows());
  SymMat out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) out.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  }
  return out;
}

Eigen::MatrixXd SymMat::dense() const {
  Eigen::MatrixXd m(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      m(i, j) = (*this)(i, j);
      m(j, i) = m(i, j);
    }
  }
  return m;
}

const char* to_string(PsdStyle style) {
  switch (style) {
    case PsdStyle::Generic: return "generic";
    case PsdStyle::LowRank: return "low_rank";
    case PsdStyle::NearBoundary: return "near_boundary";
  }
  return "?";
}

SymMat identity(int n) {
  SymMat out(n);
  for (int i = 0; i < n; ++i) out.set(i, i, 1.0);
  return out;
}

SymMat diag(std::span<const double> values) {
  SymMat out(static_cast<int>(values.size()));
  for (int i = 0; i < out.dim(); ++i) out.set(i, i, values[i]);
  return out;
}

SymMat diag(std::initializer_list<double> values) {
  return diag(std::span<const double>(values.begin(), values.size()));
}

SymMat zeros(int n) { return SymMat(n); }

SymMat operator+(const SymMat& a, const SymMat& b) {
  check_same(a, b);
  SymMat out(a.dim());
  for (int k = 0; k < a.entries(); ++k) out.set_coord(k, a.coord(k) + b.coord(k));
  return out;
}

SymMat operator-(const SymMat& a, const SymMat& b) {
  check_same(a, b);
  SymMat out(a.dim());
  for (int k = 0; k < a.entries(); ++k) out.set_coord(k, a.coord(k) - b.coord(k));
  return out;
}

SymMat operator*(double c, const SymMat& a) {
  SymMat out(a.dim());
  for (int k = 0; k < a.entries(); ++k) out.set_coord(k, c * a.coord(k));
  return out;
}

SymMat shift(const SymMat& a, double s) {
  SymMat out = a;
  for (int i = 0; i < a.dim(); ++i) out.set(i, i, a(i, i) + s);
  return out;
}

double trace(const SymMat& a) {
  double t = 0.0;
  for (int i = 0; i < a.dim(); ++i) t += a(i, i);
  return t;
}

double det(const SymMat& a) { return a.dense().partialPivLu().determinant(); }

double frobenius_norm(const SymMat& a) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = i; j < a.dim(); ++j) {
      const double v = a(i, j);
      s += (i == j ? 1.0 : 2.0) * v * v;
    }
  }
  return std::sqrt(s);
}

double tol_scale(const SymMat& a) { return 1.0 + frobenius_norm(a); }

SymMat conjugate(const SymMat& a, const Eigen::MatrixXd& tau) {
  if (tau.rows() != a.dim() || tau.cols() != a.dim()) {
    throw ArgumentError("conjugate: tau must be " + std::to_string(a.dim()) + "x" +
                        std::to_string(a.dim()));
  }
  return SymMat::from_dense(tau * a.dense() * tau.transpose());
}

EigenDecomposition eigen_decompose(const SymMat& a) {
  constexpr int kMaxSweeps = 100;
  const int n = a.dim();
  Eigen::MatrixXd m = a.dense();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = frobenius_norm(a);
  const double target = 1e-13 * norm;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) s += 2.0 * m(p, q) * m(p, q);
    }
    return std::sqrt(s);
  };

  int sweeps = 0;
  while (off_norm() > target) {
    if (sweeps == kMaxSweeps) {
      throw ConvergenceError("Jacobi eigensolve did not converge after " +
                                 std::to_string(sweeps) + " sweeps",
                             sweeps);
    }
    ++sweeps;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        // Symmetric Schur rotation zeroing (p, q).
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return m(i, i) < m(j, j); });

  EigenDecomposition out;
  out.sweeps = sweeps;
  out.spectrum.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.spectrum.values[k] = m(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Spectrum eigenvalues(const SymMat& a) { return eigen_decompose(a).spectrum; }

double spectral_radius(const SymMat& a) {
  const auto s = eigenvalues(a);
  return std::max(std::abs(s.values.front()), std::abs(s.values.back()));
}

SymMat psd_clip(const SymMat& a) {
  const auto e = eigen_decompose(a);
  Eigen::VectorXd lam(a.dim());
  for (int k = 0; k < a.dim(); ++k) lam[k] = std::max(e.spectrum.values[k], 0.0);
  return SymMat::from_dense(e.vectors * lam.asDiagonal() * e.vectors.transpose());
}

bool is_finite(const SymMat& a) {
  return std::all_of(a.upper().begin(), a.upper().end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> elementary_symmetric_all(std::span<const double> values) {
  // Coefficients of prod (t + v_i) in descending powers are sigma_0..sigma_n.
  std::vector<double> e(values.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t k = i + 1; k >= 1; --k) e[k] += values[i] * e[k - 1];
  }
  return e;
}

double elementary_symmetric(std::span<const double> values, int k) {
  const int n = static_cast<int>(values.size());
  if (k < 1 || k > n) {
    throw ArgumentError("elementary_symmetric: k must lie in [1, " + std::to_string(n) +
                        "], got " + std::to_string(k));
  }
  return elementary_symmetric_all(values)[k];
}

double elementary_symmetric(const Spectrum& s, int k) { return elementary_symmetric(s.values, k); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, CounterRng& rng) {
  Eigen::MatrixXd g(rows, cols);
  // Row-major fill so the draw order is language independent.
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  }
  return g;
}

}  // namespace

SymMat random_psd(int n, std::uint64_t seed, PsdStyle style) {
  check_dim(n);
  CounterRng rng(seed, stream_id(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(style) + 1));
  switch (style) {
    case PsdStyle::Generic: {
      const Eigen::MatrixXd b = gaussian(n, n, rng);
      return SymMat::from_dense(b * b.transpose());
    }
    case PsdStyle::LowRank: {
      const int r = (n + 1) / 2;
      const Eigen::MatrixXd b = gaussian(n, r, rng);
      return SymMat::from_dense(b * b.transpose());
    }
    case PsdStyle::NearBoundary: {
      const Eigen::MatrixXd b = gaussian(n, n, rng);
      const auto e = eigen_decompose(SymMat::from_dense(b * b.transpose()));
      Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(e.spectrum.values.data(), n);
      lam[0] = 1e-6 * rng.uniform();
      SymMat out = SymMat::from_dense(e.vectors * lam.asDiagonal() * e.vectors.transpose());
      return out;
    }
  }
  throw ArgumentError("unknown PSD style");
}

SymMat random_symmetric(int n, std::uint64_t seed) {
  check_dim(n);
  CounterRng rng(seed, stream_id(static_cast<std::uint64_t>(n), 101));
  SymMat out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) out.set(i, j, (i == j ? 1.0 : M_SQRT1_2) * rng.normal());
  }
  return out;
}

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  check_dim(n);
  CounterRng rng(seed, stream_id(static_cast<std::uint64_t>(n), 202));
  Eigen::MatrixXd q = gaussian(n, n, rng);
  // Modified Gram-Schmidt with one reorthogonalization pass. The implied
  // triangular factor has positive diagonal, which makes q Haar distributed.
  for (int j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    }
    q.col(j) /= q.col(j).norm();
  }
  return q;
}

void to_json(nlohmann::json& j, const SymMat& a) {
  j = nlohmann::json{{"n", a.dim()}, {"upper", std::vector<double>(a.upper().begin(), a.upper().end())}};
}

void from_json(const nlohmann::json& j, SymMat& a) { a = symmat_from_json(j); }

SymMat symmat_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("upper")) {
    throw ArgumentError("matrix JSON must be an object {\"n\": int, \"upper\": [...]}");
  }
  return SymMat(j.at("n").get<int>(), j.at("upper").get<std::vector<double>>());
}

}  // namespace abplab
