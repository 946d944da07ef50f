#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abplab/grid.hpp"
#include "abplab/operators.hpp"
#include "abplab/report.hpp"
#include "abplab/symmat.hpp"
#include "json.hpp"

namespace abplab {

/// Second-order jet (value, gradient, Hessian) at a point.
struct Jet2 {
  double r = 0.0;
  std::vector<double> p;
  SymMat a;

  Jet2(double r, std::vector<double> p, SymMat a);
};

/// Non-negative right-hand side f in one of the named forms
///   const:c               f = c
///   gauss:a,s[,cx,cy]     f = a exp(-|x - c|^2 / (2 s^2))
///   poly:a0,a1,...        f = sum_k a_k |x|^(2k)
struct RhsForm {
  std::string spec;
  std::function<double(const std::vector<double>&)> eval;
  /// Lipschitz constant of f on the ball |x| <= radius; 0 for constants.
  std::function<double(double radius)> lipschitz;
};
RhsForm parse_rhs(const std::string& spec);

/// g(D^2 u) = f with the constraint D^2 u in the closed cone of g (the PSD
/// cone for the norm-squared determinant).
struct EquationSpec {
  PolyOperator op;
  RhsForm f;
  /// Absent or 0 means f is constant.
  std::optional<double> f_lipschitz;

  /// Lipschitz constant taken over the grid's box. Throws ArgumentError if
  /// f is negative at a node or the operator dimension differs from the
  /// grid dimension.
  static EquationSpec on_grid(PolyOperator op, const std::string& f_spec, const GridFn& grid);
};

/// Tolerance used by the fiber tests: 1e-9 (1 + ||A||_F).
double fiber_tolerance(const SymMat& a);
/// A in the closed constraint cone (interior or boundary).
bool in_constraint_cone(const PolyOperator& g, const SymMat& a);

/// A in the closed cone and g(A) >= f(x) - tol, where tol is
/// fiber_tolerance(A) + extra_tol.
bool fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                    double extra_tol = 0.0);
/// -A outside the closed cone, or g(-A) <= f(x) + tol.
bool dual_fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                         double extra_tol = 0.0);
/// Supersolution condition taken literally: A outside the closed cone, or
/// A inside with g(A) <= f(x) + tol.
bool super_fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                          double extra_tol = 0.0);

struct NodeFlags {
  bool admissible_sub = false;
  bool super = false;
  bool dual_sub = false;
};

/// Smooth function with exact derivatives.
struct ClassicalSample {
  std::string name;
  std::function<double(const std::vector<double>&)> u;
  std::function<std::vector<double>(const std::vector<double>&)> grad;
  std::function<SymMat(const std::vector<double>&)> hess;
};

/// Flags at every active node of the grid, from the exact jets.
std::vector<NodeFlags> classify_classical(const EquationSpec& eq, const GridFn& grid,
                                          const ClassicalSample& u);
/// Flags at interior nodes with a full stencil, from stencil Hessians and
/// the extra tolerance tol_disc; other nodes are absent.
std::vector<std::optional<NodeFlags>> classify_stencil(const EquationSpec& eq, const GridFn& u,
                                                       double tol_disc);

/// eta^N / L, floored at 1e-12; +inf for constant f. The margin of the
/// inner region does not enter for Lipschitz f.
double modulus_delta(const EquationSpec& eq, double margin, double eta);
/// delta^2 / (4 M); throws ArgumentError unless delta > 0 and M > 0.
double eps_star(double delta, double m);

struct PipelineOptions {
  double eta = 0.05;
  /// Largest delta actually used; 0 means twice the largest grid spacing.
  double delta_cap = 0.0;
  /// tol_disc = tol_constant * h.
  double tol_constant = 5.0;
};

/// Sup-convolves w with eps from delta = modulus_delta and M = max |w|,
/// adds eta |x|^2 / 2, and checks g(psd_clip(-D^2)) <= f + tol_disc at
/// every upper contact node with a stencil farther than delta from the
/// boundary. Slack per node is f(x) - g(...).
CheckReport semiconvex_pipeline_check(const EquationSpec& eq, const GridFn& w,
                                      const PipelineOptions& opt = {});

struct OscillationBound {
  double osc_in = 0.0;
  double osc_bd = 0.0;
  double error_term = 0.0;
  double restricted_term = 0.0;  // sum over lower contact nodes only
  double slack = 0.0;
  double restricted_slack = 0.0;
  nlohmann::json to_json() const;
};

/// osc over the interior against osc over the boundary plus
/// diam / (|B_1|^(1/d) g(I)^(1/N)) (sum f^(d/N) cell)^(1/d), summed over
/// all interior nodes.
OscillationBound oscillation_bound_check(const EquationSpec& eq, const GridFn& h);
/// Same bound with the sum also restricted to lower contact nodes of h
/// having a stencil; restricted_term <= error_term always.
OscillationBound c11_oscillation_check(const EquationSpec& eq, const GridFn& h);

struct MaxPrincipleRecord {
  bool admissible = false;  // every node admissible_sub
  double slack = 0.0;       // max boundary - max interior
  double min_trace = 0.0;   // over all nodes, from the exact Hessian
  bool trace_ok = false;
  bool passed = false;
  nlohmann::json to_json() const;
};
MaxPrincipleRecord max_principle_check(const EquationSpec& eq, const GridFn& grid,
                                       const ClassicalSample& u);

struct SolveOptions {
  /// Det or Trace; other operators need `experimental`.
  std::optional<PolyOperator> op;
  double tol = 1e-10;
  int max_iter = 20000;
  bool experimental = false;
};

struct SolveResult {
  GridFn u;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves g(D^2 u) = f with Dirichlet data on a box by nonlinear SOR. For
/// det the scheme is the wide-stencil monotone discretisation: the minimum
/// over the axis frame and the diagonal frame of the product of positive
/// parts of the second differences. For trace it is the 5-point Laplacian.
SolveResult solve_ma_2d(const std::function<double(const std::vector<double>&)>& f,
                        const std::function<double(const std::vector<double>&)>& boundary,
                        std::vector<double> lower, std::vector<double> upper,
                        std::vector<int> shape, const SolveOptions& opt = {});

/// Discrete operator of the solver at an interior node.
double discrete_operator(const PolyOperator& op, const GridFn& u, int node);

/// Throws PreconditionError for an unconverged solve unless forced.
const GridFn& require_converged(const SolveResult& r, bool force = false);

}  // namespace abplab
