#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "abplab/grid.hpp"
#include "abplab/symmat.hpp"
#include "json.hpp"

namespace abplab {

/// Nodes admitting a global affine support from above (or below, for the
/// lower set), with the certified gradient at each flagged node.
struct ContactMask {
  std::vector<char> flag;                  // one per node; exterior nodes are never flagged
  std::vector<std::array<double, 2>> grad; // physical gradient; unused axes are 0
  double tolerance = 0.0;                  // support inequality slack, 1e-9 * scale
  bool lower = false;

  int count() const;
  /// index,x0[,x1],contact,p0[,p1]
  std::string to_csv(const GridFn& u) const;
};

/// Scale used by the contact tolerance: 1 + max |u| over active nodes.
double value_scale(const GridFn& u);

/// x -> max_y u(y) - |y - x|^2 / (2 eps) over active nodes, by separable
/// upper envelopes of parabolas. Exterior nodes keep their value.
GridFn sup_convolution(const GridFn& w, double eps);
/// w + eta |x|^2 / 2.
GridFn perturb(const GridFn& w, double eta);

/// Flags nodes on the upper concave envelope of the lifted active nodes,
/// found with exact orientation predicates; every flag is certified
/// before return (NumericError otherwise).
ContactMask upper_contact_set(const GridFn& u);
ContactMask lower_contact_set(const GridFn& v);

/// Centred second differences, mixed term by the 4-point cross. Empty when
/// the node is not interior or a stencil neighbour is inactive.
std::optional<SymMat> hessian_stencil(const GridFn& u, int node);

/// Volume of the unit ball in dimension 1 or 2.
double unit_ball_volume(int d);

struct AlexandrovRecord {
  double lhs = 0.0;           // max (min for the lower check) over interior nodes
  double boundary = 0.0;      // max (min) over boundary nodes
  double integral = 0.0;      // sum of det(psd_clip(-D^2 u)) * cell volume over contact nodes
  double rhs = 0.0;
  double slack = 0.0;
  int contact_nodes = 0;
  int integrated_nodes = 0;   // contact nodes with a full stencil
  nlohmann::json to_json() const;
};

/// max_interior u <= max_boundary u + diam / |B_1|^(1/d) * integral^(1/d).
AlexandrovRecord alexandrov_check(const GridFn& u);
/// min_interior v >= min_boundary v - diam / |B_1|^(1/d) * integral^(1/d),
/// integral over the lower contact set; slack = lhs - rhs.
AlexandrovRecord alexandrov_lower_check(const GridFn& v);

struct OscillationRecord {
  double osc_in = 0.0;
  double osc_bd = 0.0;
  double error_term = 0.0;
  double slack = 0.0;  // osc_bd + error_term - osc_in
  nlohmann::json to_json() const;
};

/// Oscillation bound for C^{1,1} grid functions, summing |det D^2 w| over
/// the union of the upper and lower contact sets.
OscillationRecord oscillation_c11_check(const GridFn& w);

/// max(0, -min) over axis and diagonal centred second differences.
double semiconvexity_modulus(const GridFn& u);

}  // namespace abplab
