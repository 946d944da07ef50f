#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace abplab {

/// Real symmetric n x n matrix stored as its upper triangle, row-major:
/// (0,0) (0,1) ... (0,n-1) (1,1) ... (n-1,n-1).
class SymMat {
 public:
  explicit SymMat(int n);
  SymMat(int n, std::vector<double> upper);

  /// Symmetric part of a square matrix, (M + M^T) / 2.
  static SymMat from_dense(const Eigen::MatrixXd& m);

  int dim() const { return n_; }
  double operator()(int i, int j) const { return upper_[index(i, j)]; }
  /// Sets both (i,j) and (j,i).
  void set(int i, int j, double v) { upper_[index(i, j)] = v; }

  std::span<const double> upper() const { return upper_; }
  /// Entries count n(n+1)/2.
  int entries() const { return static_cast<int>(upper_.size()); }
  /// Coordinate access in the upper-triangle ordering.
  double coord(int k) const { return upper_[k]; }
  void set_coord(int k, double v) { upper_[k] = v; }

  Eigen::MatrixXd dense() const;

  bool operator==(const SymMat& other) const = default;

 private:
  int index(int i, int j) const;

  int n_;
  std::vector<double> upper_;
};

/// Eigenvalues sorted ascending.
struct Spectrum {
  std::vector<double> values;
};

/// A = Q diag(values) Q^T with Q orthogonal, columns ordered like values.
struct EigenDecomposition {
  Spectrum spectrum;
  Eigen::MatrixXd vectors;
  int sweeps = 0;
};

enum class PsdStyle { Generic, LowRank, NearBoundary };

const char* to_string(PsdStyle style);

SymMat identity(int n);
SymMat diag(std::span<const double> values);
SymMat diag(std::initializer_list<double> values);
SymMat zeros(int n);

SymMat operator+(const SymMat& a, const SymMat& b);
SymMat operator-(const SymMat& a, const SymMat& b);
SymMat operator*(double c, const SymMat& a);
inline SymMat add(const SymMat& a, const SymMat& b) { return a + b; }
inline SymMat scale(double c, const SymMat& a) { return c * a; }
/// A + s I.
SymMat shift(const SymMat& a, double s);

double trace(const SymMat& a);
/// Determinant by LU with partial pivoting.
double det(const SymMat& a);
double frobenius_norm(const SymMat& a);
/// 1 + ||A||_F, the relative-tolerance scale used throughout.
double tol_scale(const SymMat& a);
/// tau A tau^T.
SymMat conjugate(const SymMat& a, const Eigen::MatrixXd& tau);

/// Cyclic Jacobi eigensolver. Stops when the off-diagonal Frobenius norm is
/// at most 1e-13 ||A||_F; throws ConvergenceError after 100 sweeps.
EigenDecomposition eigen_decompose(const SymMat& a);
Spectrum eigenvalues(const SymMat& a);
double spectral_radius(const SymMat& a);

/// Eigenvalues clamped at zero.
SymMat psd_clip(const SymMat& a);
bool is_finite(const SymMat& a);

/// sigma_k of the values via the product recurrence for prod (t + v_i).
double elementary_symmetric(const Spectrum& s, int k);
double elementary_symmetric(std::span<const double> values, int k);
/// All sigma_0 .. sigma_n.
std::vector<double> elementary_symmetric_all(std::span<const double> values);

double binomial(int n, int k);
double factorial(int n);

/// Positive semidefinite sample, deterministic in (n, seed, style).
SymMat random_psd(int n, std::uint64_t seed, PsdStyle style);
/// Symmetric matrix with independent N(0,1) upper entries (off-diagonals
/// scaled by 1/sqrt 2), deterministic in (n, seed).
SymMat random_symmetric(int n, std::uint64_t seed);
/// Haar orthogonal matrix: Gram-Schmidt of a Gaussian matrix with the
/// triangular factor's diagonal made positive.
Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed);

void to_json(nlohmann::json& j, const SymMat& a);
void from_json(const nlohmann::json& j, SymMat& a);
SymMat symmat_from_json(const nlohmann::json& j);

}  // namespace abplab
