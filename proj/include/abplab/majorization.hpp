#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abplab/operators.hpp"
#include "abplab/report.hpp"
#include "abplab/symmat.hpp"

namespace abplab {

/// g(A)^(1/N) - g(I)^(1/N) det(A)^(1/n) for PSD A. Eigenvalues down to
/// -1e-6 (1 + ||A||_F) are clipped to zero first; anything lower is a
/// PreconditionError. A negative g(A) below the roundoff band yields a
/// negative root, so the gap shows up as a violation.
double dm_gap(const PolyOperator& g, const SymMat& a);

struct SweepOptions {
  long samples = 10000;
  std::uint64_t seed = 1;
  bool hunt = false;
  /// Skip the centrality and Dirichlet prechecks (only honoured with hunt).
  bool waive_prechecks = false;
  int hunt_starts = 10;
  int hunt_iterations = 200;
  long dirichlet_samples = 300;
};

/// Determinant-majorization sweep over mixed PSD samples, with optional
/// violation hunting by projected coordinate descent. Slack is
/// dm_gap / (1 + ||A||_F), tolerance 1e-9.
CheckReport dm_sweep(const PolyOperator& g, const SweepOptions& opt);

/// (sigma_k / C(n,k))^(1/k) - (sigma_l / C(n,l))^(1/l) on the spectrum of a
/// PSD matrix, eigenvalues clipped at zero.
double maclaurin_gap(const SymMat& a, int k, int l);
/// All pairs k <= l over PSD samples in dimension n.
CheckReport maclaurin_check(int n, long samples, std::uint64_t seed);

/// Homogeneous polynomial p(x) = G(tau diag(x) tau^T) in monomial form.
struct MonomialExpansion {
  int n = 0;
  int degree = 0;
  /// Exponent multi-indices, each summing to `degree`, in lexicographically
  /// decreasing order, with their coefficients.
  std::vector<std::vector<int>> exponents;
  std::vector<double> coefficients;
  double fit_residual = 0.0;  // relative to max |sampled value|

  double evaluate(const std::vector<double>& x) const;
  double coefficient(const std::vector<int>& alpha) const;
};

/// Exponents of all degree-N monomials in n variables (lex decreasing).
std::vector<std::vector<int>> monomial_basis(int n, int degree);

/// Least-squares fit of the monomial coefficients from 2x basis-size points
/// in [-2, 2]^n with every |x_i| >= 0.1. Throws NumericError when the
/// basis exceeds 1e4 terms or the refit residual exceeds 1e-8.
MonomialExpansion coefficient_expansion(const PolyOperator& g, const Eigen::MatrixXd& tau,
                                        std::uint64_t seed = 0);

/// Proof that coefficient_condition passed for one operator; the only way
/// to obtain one is a passing run.
class CoefficientCertificate {
 public:
  const std::string& op() const { return op_; }
  double central_k() const { return k_; }

 private:
  friend CheckReport coefficient_condition(const PolyOperator&, int, std::uint64_t, double,
                                           std::optional<CoefficientCertificate>*);
  CoefficientCertificate(std::string op, double k) : op_(std::move(op)), k_(k) {}
  std::string op_;
  double k_;
};

/// Expands G at tau = I and num_tau Haar samples. Slack is the smallest
/// coefficient over max |coefficient|; default tolerance 1e-7. A
/// certificate is issued when the check passes and G is I-central.
CheckReport coefficient_condition(const PolyOperator& g, int num_tau, std::uint64_t seed,
                                  double tol = 1e-7,
                                  std::optional<CoefficientCertificate>* certificate = nullptr);

/// dm_gap for operators certified by the coefficient condition; no
/// hyperbolicity is needed. Throws PreconditionError without a matching
/// certificate.
double dm_gap_ng(const PolyOperator& g, const SymMat& a, const CoefficientCertificate& cert);
CheckReport dm_sweep_ng(const PolyOperator& g, const CoefficientCertificate& cert,
                        const SweepOptions& opt);

}  // namespace abplab
