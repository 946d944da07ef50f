#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abplab/errors.hpp"
#include "abplab/report.hpp"
#include "abplab/symmat.hpp"

namespace abplab {

enum class OpKind { Det, KHessian, PFoldSum, Trace, Product, RadialDerivative, NormSqDet, Custom };

/// Constraint cone attached to an operator: its Garding cone, or the PSD
/// cone for operators that are not hyperbolic (the norm-squared determinant).
enum class ConeKind { Garding, Psd };

/// Homogeneous polynomial operator on symmetric n x n matrices.
/// Immutable; copies share the expression tree.
class PolyOperator {
 public:
  static PolyOperator det(int n);
  static PolyOperator khessian(int k, int n);
  static PolyOperator pfold(int p, int n);
  static PolyOperator trace(int n);
  static PolyOperator product(const PolyOperator& left, const PolyOperator& right);
  static PolyOperator radial_derivative(const PolyOperator& base, int l);
  static PolyOperator normsqdet(int n);
  /// Arbitrary homogeneous evaluator of the given degree. The caller vouches
  /// for homogeneity; g(I) > 0 is still enforced.
  static PolyOperator custom(std::string name, int n, int degree,
                             std::function<double(const SymMat&)> fn,
                             ConeKind cone = ConeKind::Psd);

  OpKind kind() const;
  int dim() const;
  int degree() const;
  double value_at_identity() const;
  /// k, p or l for KHessian, PFoldSum, RadialDerivative; 0 otherwise.
  int param() const;
  /// Children of Product (left, right) and RadialDerivative (left only).
  PolyOperator left() const;
  PolyOperator right() const;
  ConeKind cone() const;
  /// True for kinds whose value depends only on the spectrum.
  bool orthogonally_invariant() const;
  /// Catalog string, e.g. "sigma:k=2,n=4"; parse_operator(spec()) round-trips.
  std::string spec() const;

  double evaluate(const SymMat& a) const;

 private:
  struct Node;
  explicit PolyOperator(std::shared_ptr<const Node> node);
  // Caches g(I) on a fresh node and rejects g(I) <= 0.
  static PolyOperator finish(std::shared_ptr<Node> node);
  std::shared_ptr<const Node> node_;
};

/// Parses the catalog grammar:
///   det:n=N  sigma:k=K,n=N  pfold:p=P,n=N  trace:n=N  normsqdet:n=N
///   prod(OP,OP)  rderiv(OP,l=L)
PolyOperator parse_operator(const std::string& spec);
/// One line per grammar form, used in parse errors and `abplab ops list`.
std::vector<std::string> catalog_forms();

/// phi_A(t) = g(tI + A) as c_0 + c_1 t + ... + c_N t^N.
struct RadialPoly {
  std::vector<double> coeffs;
  double radius = 0.0;    // interpolation nodes lie in [-radius, radius]
  double residual = 0.0;  // max refit error at check nodes, relative to max |phi|
};

/// Interpolates phi_A at N+1 Chebyshev nodes and audits the fit at N
/// interleaved nodes; throws NumericError if the audit exceeds 1e-8.
RadialPoly radial_poly_coeffs(const PolyOperator& g, const SymMat& a);

struct GardingSpectrum {
  std::vector<double> values;  // ascending
  double max_imag = 0.0;       // after near-multiple roots are consolidated
  double raw_max_imag = 0.0;   // straight from the companion eigensolve
};

/// In-band result: phi_A has non-real roots.
struct NotHyperbolicAt {
  SymMat at;
  double max_imag = 0.0;
};

/// Value or NotHyperbolicAt. value() on a failure throws PreconditionError.
template <class T>
class HypResult {
 public:
  HypResult(T v) : value_(std::move(v)) {}
  HypResult(NotHyperbolicAt f) : failure_(std::move(f)) {}

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }
  const T& value() const {
    if (!value_) {
      throw PreconditionError("operator is not hyperbolic at the given matrix (max |Im root| = " +
                              std::to_string(failure_->max_imag) + ")");
    }
    return *value_;
  }
  const NotHyperbolicAt& failure() const { return *failure_; }

 private:
  std::optional<T> value_;
  std::optional<NotHyperbolicAt> failure_;
};

constexpr double kRealnessTol = 1e-7;

HypResult<GardingSpectrum> garding_eigenvalues(const PolyOperator& g, const SymMat& a,
                                               double tol = kRealnessTol);

enum class ConeTag { Interior, Boundary, Outside };
const char* to_string(ConeTag tag);

struct ConePosition {
  ConeTag tag = ConeTag::Outside;
  double min_garding_eig = 0.0;
};

/// Interior if min eigenvalue > theta*scale, Outside if < -theta*scale,
/// with theta = 1e-8 and scale = 1 + max |Garding eigenvalue|.
HypResult<ConePosition> cone_contains(const PolyOperator& g, const SymMat& a);

/// Membership in the closed constraint cone: the closed Garding cone, or
/// the PSD cone for ConeKind::Psd. Non-hyperbolic points are outside.
bool in_closed_cone(const PolyOperator& g, const SymMat& a);

/// A - lambda_min^g(A) I.
HypResult<SymMat> boundary_project(const PolyOperator& g, const SymMat& a);

struct CentralityProbe {
  Eigen::MatrixXd gradient;  // D_I g
  double k = 0.0;            // tr(gradient) / n
  double deviation = 0.0;    // max |gradient - kI|
};

/// Finite-difference gradient of g at I (step 1e-5, Richardson with h/2).
CentralityProbe central_gradient(const PolyOperator& g);
/// k when D_I g is within tol*(1+k) of kI with k > 0.
std::optional<double> is_I_central(const PolyOperator& g, double tol = 1e-6);

/// Deterministic point of the closed cone: a random symmetric matrix moved
/// onto the boundary and then shifted by 0, a small or a large multiple of
/// I; every fourth index is a PSD sample instead. For ConeKind::Psd the
/// boundary move uses ordinary eigenvalues.
HypResult<SymMat> sample_closed_cone(const PolyOperator& g, std::uint64_t seed, std::uint64_t index);
/// Mixed PSD sample cycling through generic, low-rank and near-boundary
/// styles with a random overall scale.
SymMat sample_psd(int n, std::uint64_t seed, std::uint64_t index);

CheckReport is_dirichlet(const PolyOperator& g, long samples, std::uint64_t seed);
CheckReport degenerate_ellipticity_check(const PolyOperator& g, long samples, std::uint64_t seed);

struct TameGap {
  double with_identity = 0.0;     // g(A+eta I) - g(A) - g(I) eta^N
  double without_identity = 0.0;  // g(A+eta I) - g(A) - eta^N
};
/// Throws PreconditionError when A is outside the closed cone.
TameGap tameness_gap(const PolyOperator& g, const SymMat& a, double eta);
CheckReport tameness_check(const PolyOperator& g, long samples, std::uint64_t seed);

/// Random symmetric samples: orthogonal invariance, homogeneity, the
/// eigenvalue-product identity and the shift rule for the spectrum.
CheckReport hyperbolicity_check(const PolyOperator& g, long samples, std::uint64_t seed);

}  // namespace abplab
